#pragma once

// Oracle-backed checks for every example whose expected value is derived
// rather than read off a formula. Unit tests assert them one by one; the
// acceptance binary runs the whole list.

#include <string>
#include <vector>

namespace derived {

struct Result {
  bool passed = true;
  std::string detail;

  // Records a failure message when `ok` is false.
  void expect(bool ok, const std::string& message);
};

struct Check {
  const char* module;
  const char* name;
  Result (*run)();
};

const std::vector<Check>& all();

// Runs the named check; aborts the process on an unknown name.
Result run(const std::string& name);

}  // namespace derived
