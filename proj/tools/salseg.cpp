#include <iostream>

int main() {
  std::cout << "salseg (under construction)\n";
  return 0;
}
