#pragma once

#include <string>
#include <vector>

namespace mmgbm {

// shortest decimal that parses back to the same double
std::string fmt_double(double v);

// Minimal CSV assembly: numeric cells, header mandatory, '\n' line ends.
class CsvBuilder {
 public:
  explicit CsvBuilder(const std::vector<std::string>& header);

  CsvBuilder& cell(double v);
  CsvBuilder& cell(long v);
  CsvBuilder& cell(int v);
  CsvBuilder& cell(const std::string& v);
  CsvBuilder& endrow();

  const std::string& str() const { return out_; }

 private:
  std::string out_;
  bool row_open_ = false;
};

void write_file(const std::string& path, const std::string& content);

}  // namespace mmgbm
