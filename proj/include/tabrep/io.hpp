#pragma once

#include <string>

namespace tabrep {

// Write to `<path>.tmp.<pid>` then rename over the target, so readers never
// observe a half-written file and reruns are idempotent.
void atomic_write_file(const std::string& path, const std::string& contents);

std::string read_file(const std::string& path);

// shortest text form of a double that parses back to the same bits
std::string format_double(double v);

}  // namespace tabrep
