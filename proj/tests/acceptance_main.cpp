// One PASS/FAIL line per acceptance criterion; nonzero exit if any fails.

#include "mmflow/acceptance.hpp"
#include "mmflow/config.hpp"

#include <iostream>
#include <string>

int main(int argc, char** argv) {
  mmflow::AcceptanceOptions opt;
  opt.threads = mmflow::resolve_threads(std::nullopt);
  std::vector<int> ids;
  for (int a = 1; a < argc; ++a) ids.push_back(std::stoi(argv[a]));
  if (ids.empty()) ids = mmflow::suite_criteria("acceptance");
  int failed = 0;
  for (int id : ids) {
    const auto r = mmflow::run_criterion(id, opt);
    std::cout << mmflow::format_result(r) << std::endl;
    failed += !r.pass;
  }
  std::cout << (ids.size() - failed) << " of " << ids.size() << " criteria pass" << std::endl;
  return failed ? 1 : 0;
}
