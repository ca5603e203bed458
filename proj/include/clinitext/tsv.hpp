#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace clinitext::tsv {

struct Row {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line on which the record starts
};

// Tab-delimited reader with RFC-4180 quoting: a field that starts with '"'
// runs to the closing quote, "" is a literal quote, and tabs/newlines inside
// quotes are kept. CRLF record terminators are accepted.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  // Next record, or nullopt at end of input. Throws ParseError on an
  // unterminated quoted field.
  std::optional<Row> next();

 private:
  std::istream& in_;
  std::size_t line_ = 1;
};

}  // namespace clinitext::tsv
