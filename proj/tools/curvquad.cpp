#include <cstdio>
int main() { std::puts("curvquad placeholder"); return 0; }
