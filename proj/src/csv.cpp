#include "mmgbm/csv.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "mmgbm/errors.hpp"

namespace mmgbm {

std::string fmt_double(double v) {
  char buf[40];
  // try increasing precision until the value round-trips
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) return buf;
  }
  return buf;
}

CsvBuilder::CsvBuilder(const std::vector<std::string>& header) {
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) out_ += ',';
    out_ += header[i];
  }
  out_ += '\n';
}

CsvBuilder& CsvBuilder::cell(double v) { return cell(fmt_double(v)); }
CsvBuilder& CsvBuilder::cell(long v) { return cell(std::to_string(v)); }
CsvBuilder& CsvBuilder::cell(int v) { return cell(std::to_string(v)); }

CsvBuilder& CsvBuilder::cell(const std::string& v) {
  if (row_open_) out_ += ',';
  out_ += v;
  row_open_ = true;
  return *this;
}

CsvBuilder& CsvBuilder::endrow() {
  out_ += '\n';
  row_open_ = false;
  return *this;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) raise(ErrorCode::ValidationError, "cannot open for writing: " + path);
  f << content;
}

}  // namespace mmgbm
