#include <iostream>

int main() {
  std::cout << "compnav: cli not wired yet\n";
  return 0;
}
