#include "clinitext/tsv.hpp"

#include "clinitext/errors.hpp"

namespace clinitext::tsv {

std::optional<Row> Reader::next() {
  if (in_.peek() == std::char_traits<char>::eof()) return std::nullopt;

  Row row;
  row.line = line_;
  std::string field;
  bool quoted = false;      // inside a quoted section
  bool was_quoted = false;  // current field began with a quote
  bool at_field_start = true;

  auto finish_field = [&] {
    row.fields.push_back(std::move(field));
    field.clear();
    was_quoted = false;
    at_field_start = true;
  };

  int ch;
  while ((ch = in_.get()) != std::char_traits<char>::eof()) {
    char c = static_cast<char>(ch);
    if (quoted) {
      if (c == '"') {
        if (in_.peek() == '"') {
          in_.get();
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line_;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && at_field_start) {
      quoted = true;
      was_quoted = true;
      at_field_start = false;
      continue;
    }
    if (c == '\t') {
      finish_field();
      continue;
    }
    if (c == '\n') {
      ++line_;
      if (!was_quoted && !field.empty() && field.back() == '\r') field.pop_back();
      finish_field();
      return row;
    }
    if (c == '\r' && was_quoted && in_.peek() == '\n') continue;
    at_field_start = false;
    field.push_back(c);
  }
  if (quoted) throw ParseError(row.line, "unterminated quoted field starting on line " + std::to_string(row.line));
  if (!was_quoted && !field.empty() && field.back() == '\r') field.pop_back();
  finish_field();
  return row;
}

}  // namespace clinitext::tsv
