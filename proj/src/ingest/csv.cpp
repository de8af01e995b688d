#include <algorithm>
#include <istream>

#include <fmt/format.h>

#include "fairrank/ingest.hpp"
#include "text.hpp"

namespace fairrank {

ParseError::ParseError(std::string source, std::size_t line,
                       const std::string& message)
    : std::runtime_error(line > 0 ? fmt::format("{}:{}: {}", source, line,
                                                message)
                                  : fmt::format("{}: {}", source, message)),
      source_(std::move(source)),
      line_(line) {}

CsvReader::CsvReader(std::istream& in, std::string source)
    : in_(in), source_(std::move(source)) {}

bool CsvReader::next(std::vector<std::string>& fields) {
  if (first_) {
    first_ = false;
    // UTF-8 byte order mark.
    if (in_.peek() == 0xEF) {
      char bom[3];
      in_.read(bom, 3);
      if (!(in_.gcount() == 3 && static_cast<unsigned char>(bom[1]) == 0xBB &&
            static_cast<unsigned char>(bom[2]) == 0xBF)) {
        for (std::streamsize i = in_.gcount(); i > 0; --i) in_.unget();
      }
    }
  }
  for (;;) {
    fields.clear();
    record_line_ = line_;
    std::string field;
    bool in_quotes = false;
    bool quoted = false;
    bool any = false;
    bool ended = false;
    int c;
    while (!ended && (c = in_.get()) != std::char_traits<char>::eof()) {
      any = true;
      if (in_quotes) {
        if (c == '"') {
          if (in_.peek() == '"') {
            in_.get();
            field += '"';
          } else {
            in_quotes = false;
          }
        } else {
          if (c == '\n') ++line_;
          field += static_cast<char>(c);
        }
        continue;
      }
      switch (c) {
        case '"':
          if (trim(field).empty()) {
            field.clear();
            in_quotes = quoted = true;
          } else {
            field += '"';
          }
          break;
        case ',':
          fields.push_back(quoted ? field : std::string(trim(field)));
          field.clear();
          quoted = false;
          break;
        case '\r':
          if (in_.peek() == '\n') break;
          [[fallthrough]];
        case '\n':
          ++line_;
          ended = true;
          break;
        default:
          field += static_cast<char>(c);
      }
    }
    if (in_quotes) {
      throw ParseError(source_, record_line_, "unterminated quoted field");
    }
    if (!any) return false;
    fields.push_back(quoted ? field : std::string(trim(field)));
    bool blank = fields.size() == 1 && fields[0].empty() && !quoted;
    if (!blank) return true;
    if (!ended) return false;
  }
}

CsvHeader::CsvHeader(std::vector<std::string> names, std::string source)
    : names_(std::move(names)), source_(std::move(source)) {
  for (auto& name : names_) name = std::string(trim(name));
}

std::optional<std::size_t> CsvHeader::find(
    std::initializer_list<std::string_view> aliases) const {
  for (std::string_view alias : aliases) {
    auto it = std::find(names_.begin(), names_.end(), alias);
    if (it != names_.end()) {
      return static_cast<std::size_t>(it - names_.begin());
    }
  }
  return std::nullopt;
}

std::size_t CsvHeader::require(
    std::initializer_list<std::string_view> aliases) const {
  if (auto index = find(aliases)) return *index;
  throw ParseError(source_, 1,
                   fmt::format("missing required column '{}'",
                               fmt::join(aliases, "' or '")));
}

std::string csv_escape(std::string_view field) {
  bool needs_quotes =
      field.find_first_of(",\"\r\n") != std::string_view::npos ||
      (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace fairrank
