// Command-line front end. Grown alongside the library; see README for usage.

#include <cstdio>

int main() {
    std::puts("flakyfix: CLI under construction");
    return 2;
}
