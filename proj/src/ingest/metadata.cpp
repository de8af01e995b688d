#include <algorithm>
#include <fstream>
#include <istream>
#include <tuple>

#include <fmt/format.h>

#include "fairrank/ingest.hpp"
#include "text.hpp"

namespace fairrank {

namespace {


CsvHeader read_header(CsvReader& reader) {
  std::vector<std::string> row;
  if (!reader.next(row)) {
    throw ParseError(reader.source(), 0, "missing header row");
  }
  return CsvHeader(std::move(row), reader.source());
}

const std::string& field(const std::vector<std::string>& row, std::size_t col,
                         const CsvReader& reader) {
  if (col >= row.size()) {
    throw ParseError(reader.source(), reader.line(),
                     fmt::format("expected at least {} fields, got {}",
                                 col + 1, row.size()));
  }
  return row[col];
}

template <typename T>
std::optional<T> optional_number(const std::vector<std::string>& row,
                                 std::optional<std::size_t> col,
                                 const CsvReader& reader,
                                 std::string_view name) {
  if (!col) return std::nullopt;
  const std::string& text = field(row, *col, reader);
  if (trim(text).empty()) return std::nullopt;
  auto value = parse_number<T>(text);
  if (!value) {
    throw ParseError(reader.source(), reader.line(),
                     fmt::format("column {}: '{}' is not a number", name, text));
  }
  return value;
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  return in;
}

}  // namespace

const std::vector<AuthorId>* Catalog::authors_of(const DocId& doc) const {
  auto it = papers.find(doc);
  return it == papers.end() ? nullptr : &it->second.authors;
}

Catalog parse_metadata(std::istream& paper_metadata,
                       std::istream& author_metadata,
                       std::istream& authors_for_papers) {
  Catalog catalog;
  std::vector<std::string> row;

  {
    CsvReader reader(paper_metadata, "paper_metadata.csv");
    CsvHeader header = read_header(reader);
    const std::size_t id = header.require({"paper_sha", "paper_id", "id"});
    const auto title = header.find({"title"});
    const auto year = header.find({"year"});
    const auto venue = header.find({"venue"});
    const auto citations =
        header.find({"n_citations", "num_citations", "citations"});
    while (reader.next(row)) {
      PaperInfo paper;
      paper.id = field(row, id, reader);
      if (title) paper.title = field(row, *title, reader);
      if (venue) paper.venue = field(row, *venue, reader);
      paper.year = optional_number<long long>(row, year, reader, "year");
      paper.citations =
          optional_number<long long>(row, citations, reader, "citations");
      if (!catalog.papers.emplace(paper.id, paper).second) {
        catalog.warnings.push_back(fmt::format(
            "{}:{}: duplicate paper {}; first row kept", reader.source(),
            reader.line(), paper.id));
      }
    }
  }

  {
    CsvReader reader(author_metadata, "author_metadata.csv");
    CsvHeader header = read_header(reader);
    const std::size_t id =
        header.require({"corpus_author_id", "author_id", "id"});
    const auto name = header.find({"name"});
    const auto citations =
        header.find({"num_citations", "citation_count", "n_citations"});
    const auto papers = header.find({"num_papers", "paper_count"});
    const auto h_index = header.find({"h_index", "hindex"});
    while (reader.next(row)) {
      AuthorInfo author;
      author.id = field(row, id, reader);
      if (name) author.name = field(row, *name, reader);
      author.citation_count =
          optional_number<long long>(row, citations, reader, "citations");
      author.paper_count =
          optional_number<long long>(row, papers, reader, "papers");
      author.h_index = optional_number<double>(row, h_index, reader, "h_index");
      if (!catalog.authors.emplace(author.id, author).second) {
        catalog.warnings.push_back(fmt::format(
            "{}:{}: duplicate author {}; first row kept", reader.source(),
            reader.line(), author.id));
      }
    }
  }

  {
    CsvReader reader(authors_for_papers, "authors_for_papers.csv");
    CsvHeader header = read_header(reader);
    const std::size_t paper_col = header.require({"paper_sha", "paper_id"});
    const std::size_t author_col =
        header.require({"corpus_author_id", "author_id"});
    const std::size_t position_col = header.require({"position"});

    // paper -> (position, file order, author)
    std::map<DocId, std::vector<std::tuple<long long, std::size_t, AuthorId>>>
        slots;
    std::size_t order = 0;
    while (reader.next(row)) {
      const std::string& paper = field(row, paper_col, reader);
      const std::string& author = field(row, author_col, reader);
      const std::string& position_text = field(row, position_col, reader);
      auto position = parse_number<long long>(position_text);
      if (!position) {
        throw ParseError(reader.source(), reader.line(),
                         fmt::format("position '{}' is not an integer",
                                     position_text));
      }
      if (!catalog.papers.contains(paper)) {
        catalog.warnings.push_back(fmt::format(
            "{}:{}: unknown paper {}; row kept", reader.source(),
            reader.line(), paper));
      }
      if (!catalog.authors.contains(author)) {
        catalog.warnings.push_back(fmt::format(
            "{}:{}: unknown author {}", reader.source(), reader.line(),
            author));
      }
      slots[paper].emplace_back(*position, order++, author);
    }

    for (auto& [paper, entries] : slots) {
      std::sort(entries.begin(), entries.end());
      PaperInfo& info = catalog.papers[paper];
      info.id = paper;
      info.authors.clear();
      for (std::size_t i = 0; i < entries.size(); ++i) {
        long long position = std::get<0>(entries[i]);
        if (i > 0 && position == std::get<0>(entries[i - 1])) {
          catalog.warnings.push_back(fmt::format(
              "paper {}: duplicate author position {}", paper, position));
        } else if (i > 0 && position != std::get<0>(entries[i - 1]) + 1) {
          catalog.warnings.push_back(fmt::format(
              "paper {}: gap in author positions before {}", paper, position));
        }
        info.authors.push_back(std::get<2>(entries[i]));
      }
      long long first = std::get<0>(entries.front());
      if (first != 0 && first != 1) {
        catalog.warnings.push_back(fmt::format(
            "paper {}: author positions start at {}", paper, first));
      }
    }
  }
  return catalog;
}

Catalog load_metadata(const std::filesystem::path& paper_metadata,
                      const std::filesystem::path& author_metadata,
                      const std::filesystem::path& authors_for_papers) {
  std::ifstream papers = open(paper_metadata);
  std::ifstream authors = open(author_metadata);
  std::ifstream authorship = open(authors_for_papers);
  return parse_metadata(papers, authors, authorship);
}

}  // namespace fairrank
