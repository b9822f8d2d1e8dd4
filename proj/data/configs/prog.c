/* Placeholder translation unit; mockcc only checks that it exists. */
int main(void) { return 0; }
