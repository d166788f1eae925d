#include "clbayes/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "clbayes/errors.hpp"

namespace clbayes {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0.0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw NumericalError("format_double: conversion failed");
  return {buf, ptr};
}

double parse_double(const std::string& token, const std::string& what) {
  if (token == "nan") return std::nan("");
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || token.empty()) {
    throw InvalidInput(what + ": '" + token + "' is not a number");
  }
  return value;
}

long long parse_int(const std::string& token, const std::string& what) {
  long long value = 0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || token.empty()) {
    throw InvalidInput(what + ": '" + token + "' is not an integer");
  }
  return value;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(current);
  for (auto& f : fields) {
    std::size_t a = f.find_first_not_of(" \t");
    std::size_t b = f.find_last_not_of(" \t");
    f = (a == std::string::npos) ? std::string() : f.substr(a, b - a + 1);
  }
  return fields;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw InvalidInput("write to '" + path + "' failed");
}

namespace {

std::vector<std::vector<std::string>> read_rows(const std::string& path,
                                                const std::vector<std::string>& header,
                                                std::vector<std::size_t>* line_numbers) {
  std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<std::string> fields = split_fields(line);
    bool blank = true;
    for (const auto& f : fields) {
      if (!f.empty()) blank = false;
    }
    if (blank) continue;
    if (!saw_header) {
      if (fields != header) {
        std::string expect;
        for (std::size_t i = 0; i < header.size(); ++i) {
          if (i) expect.push_back(',');
          expect += header[i];
        }
        throw ParseError(path, line_no, "expected header '" + expect + "'");
      }
      saw_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      throw ParseError(path, line_no, "expected " + std::to_string(header.size()) +
                                          " fields, found " + std::to_string(fields.size()));
    }
    rows.push_back(std::move(fields));
    if (line_numbers) line_numbers->push_back(line_no);
  }
  if (!saw_header) throw ParseError(path, 1, "file is empty");
  return rows;
}

int parse_count(const std::string& path, std::size_t line_no, const std::string& token,
                const std::string& what, int lo) {
  long long v;
  try {
    v = parse_int(token, what);
  } catch (const InvalidInput& e) {
    throw ParseError(path, line_no, e.what());
  }
  if (v < lo || v > 1000000000LL) {
    throw ParseError(path, line_no, what + " out of range: " + token);
  }
  return static_cast<int>(v);
}

}  // namespace

MetaDataset read_dataset_csv(const std::string& path) {
  std::vector<std::size_t> lines;
  auto rows = read_rows(path, {"study", "n1", "y1", "n2", "y2"}, &lines);
  if (rows.empty()) throw ParseError(path, 1, "no study rows");
  std::vector<StudyRecord> studies;
  studies.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& f = rows[r];
    std::size_t ln = lines[r];
    StudyRecord rec;
    rec.study_id = f[0];
    if (rec.study_id.empty()) throw ParseError(path, ln, "empty study id");
    int n1 = parse_count(path, ln, f[1], "n1", 1);
    int y1 = parse_count(path, ln, f[2], "y1", 0);
    int n2 = parse_count(path, ln, f[3], "n2", 1);
    int y2 = parse_count(path, ln, f[4], "y2", 0);
    if (y1 > n1) throw ParseError(path, ln, "y1 exceeds n1");
    if (y2 > n2) throw ParseError(path, ln, "y2 exceeds n2");
    rec.groups.push_back({n1, y1});
    rec.groups.push_back({n2, y2});
    studies.push_back(std::move(rec));
  }
  try {
    return MetaDataset(std::move(studies));
  } catch (const InvalidInput& e) {
    throw ParseError(path, 1, e.what());
  }
}

void write_dataset_csv(const std::string& path, const MetaDataset& data) {
  if (data.group_count() != 2) throw InvalidInput("write_dataset_csv: expects two groups");
  std::string out = "study,n1,y1,n2,y2\n";
  for (const auto& s : data.studies()) {
    out += s.study_id;
    for (const auto& cell : s.groups) {
      out += "," + std::to_string(cell.size) + "," + std::to_string(cell.events);
    }
    out.push_back('\n');
  }
  write_text_file(path, out);
}

std::vector<std::array<int, 2>> read_size_table_csv(const std::string& path) {
  std::vector<std::size_t> lines;
  auto rows = read_rows(path, {"study", "n1", "n2"}, &lines);
  if (rows.empty()) throw ParseError(path, 1, "no study rows");
  std::vector<std::array<int, 2>> sizes;
  sizes.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& f = rows[r];
    sizes.push_back({parse_count(path, lines[r], f[1], "n1", 1),
                     parse_count(path, lines[r], f[2], "n2", 1)});
  }
  return sizes;
}

void write_size_table_csv(const std::string& path, const std::vector<std::array<int, 2>>& sizes) {
  std::string out = "study,n1,n2\n";
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    out += std::to_string(i + 1) + "," + std::to_string(sizes[i][0]) + "," +
           std::to_string(sizes[i][1]) + "\n";
  }
  write_text_file(path, out);
}

}  // namespace clbayes
