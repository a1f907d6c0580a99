#include "leakaudit/csv.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "leakaudit/strings.hpp"

namespace leakaudit {
namespace {

using Record = std::vector<std::string>;

// RFC 4180 style records: quoted fields may contain delimiters, doubled
// quotes and newlines.
std::vector<Record> read_records(std::string_view text, char delim) {
  std::vector<Record> records;
  Record current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  auto end_field = [&] {
    current.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (ch == delim) {
      end_field();
    } else if (ch == '\n' || ch == '\r') {
      if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
    } else {
      field.push_back(ch);
      field_started = true;
    }
  }
  if (in_quotes) throw InputError("unterminated quoted field at end of input");
  if (field_started || !current.empty()) end_record();
  return records;
}

bool is_year(std::string_view s) {
  s = trim(s);
  return s.size() == 4 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::int64_t year_seconds(int y) {
  using namespace std::chrono;
  const sys_days d = year{y} / January / 1;
  return static_cast<std::int64_t>(d.time_since_epoch().count()) * 86400;
}

int parse_fixed(std::string_view s, std::size_t pos, std::size_t len, bool& ok) {
  if (pos + len > s.size()) {
    ok = false;
    return 0;
  }
  int v = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') {
      ok = false;
      return 0;
    }
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

std::optional<bool> parse_bool(std::string_view s) {
  const auto v = to_lower(trim(s));
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  return std::nullopt;
}

}  // namespace

std::optional<std::int64_t> parse_iso_timestamp(std::string_view s) {
  using namespace std::chrono;
  s = trim(s);
  bool ok = true;
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  const int y = parse_fixed(s, 0, 4, ok);
  const int mo = parse_fixed(s, 5, 2, ok);
  const int d = parse_fixed(s, 8, 2, ok);
  if (!ok) return std::nullopt;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  std::int64_t secs = static_cast<std::int64_t>(sys_days{ymd}.time_since_epoch().count()) * 86400;
  if (s.size() == 10) return secs;
  if (s[10] != 'T' && s[10] != ' ') return std::nullopt;
  std::string_view rest = s.substr(11);
  if (!rest.empty() && rest.back() == 'Z') rest.remove_suffix(1);
  if (rest.size() < 5 || rest[2] != ':') return std::nullopt;
  const int hh = parse_fixed(rest, 0, 2, ok);
  const int mm = parse_fixed(rest, 3, 2, ok);
  int ss = 0;
  std::size_t pos = 5;
  if (rest.size() > 5) {
    if (rest[5] != ':') return std::nullopt;
    ss = parse_fixed(rest, 6, 2, ok);
    pos = 8;
    if (rest.size() > 8) {
      if (rest[8] != '.' || rest.size() == 9) return std::nullopt;
      for (std::size_t i = 9; i < rest.size(); ++i) {
        if (rest[i] < '0' || rest[i] > '9') return std::nullopt;
      }
      pos = rest.size();
    }
  }
  if (!ok || pos != rest.size() || hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  return secs + hh * 3600 + mm * 60 + ss;
}

Dataset parse_csv(std::string_view text, const IngestOptions& options, std::string name) {
  auto records = read_records(text, options.delimiter);
  // Blank trailing lines carry no data.
  while (!records.empty() && records.back().size() == 1 && trim(records.back()[0]).empty()) {
    records.pop_back();
  }
  if (records.empty()) throw InputError("empty CSV input");

  Record header;
  std::size_t first = 0;
  if (options.header) {
    header = records.front();
    first = 1;
  } else {
    for (std::size_t i = 0; i < records.front().size(); ++i) header.push_back("c" + std::to_string(i));
  }
  std::unordered_set<std::string> seen;
  for (auto& h : header) {
    h = std::string(trim(h));
    if (h.empty()) throw InputError("empty column name in header");
    if (!seen.insert(h).second) throw InputError("duplicate column name '" + h + "'");
  }
  const std::size_t ncol = header.size();
  for (std::size_t r = first; r < records.size(); ++r) {
    if (records[r].size() != ncol) {
      const std::size_t data_row = r - first + 1;
      throw InputError("ragged row at data row " + std::to_string(data_row) + ": " +
                       std::to_string(records[r].size()) + " cells, header has " + std::to_string(ncol));
    }
  }
  const std::size_t nrow = records.size() - first;

  auto missing = [&](std::string_view cell) {
    const auto t = trim(cell);
    return std::any_of(options.missing_tokens.begin(), options.missing_tokens.end(),
                       [&](const std::string& tok) { return t == tok; });
  };

  std::vector<Column> columns;
  columns.reserve(ncol);
  for (std::size_t c = 0; c < ncol; ++c) {
    std::vector<std::string_view> raw(nrow);
    std::vector<bool> miss(nrow);
    std::size_t present = 0;
    for (std::size_t r = 0; r < nrow; ++r) {
      raw[r] = records[first + r][c];
      miss[r] = missing(raw[r]);
      present += !miss[r];
    }
    auto all_present = [&](auto pred) {
      for (std::size_t r = 0; r < nrow; ++r) {
        if (!miss[r] && !pred(raw[r])) return false;
      }
      return true;
    };

    Column col;
    col.name = header[c];
    col.cells.resize(nrow);
    const bool any = present > 0;

    if (any && all_present([](std::string_view s) { return parse_iso_timestamp(s).has_value(); })) {
      col.dtype = DType::timestamp;
      for (std::size_t r = 0; r < nrow; ++r) {
        if (!miss[r]) col.cells[r] = Timestamp{*parse_iso_timestamp(raw[r]), std::string(trim(raw[r]))};
      }
    } else if (any && options.year_as_timestamp && all_present(is_year)) {
      col.dtype = DType::timestamp;
      for (std::size_t r = 0; r < nrow; ++r) {
        if (miss[r]) continue;
        const auto t = trim(raw[r]);
        const int y = (t[0] - '0') * 1000 + (t[1] - '0') * 100 + (t[2] - '0') * 10 + (t[3] - '0');
        col.cells[r] = Timestamp{year_seconds(y), std::string(t)};
      }
    } else if (any && all_present([](std::string_view s) {
                 double d;
                 return parse_double(s, d);
               })) {
      col.dtype = DType::numeric;
      for (std::size_t r = 0; r < nrow; ++r) {
        double d = 0;
        if (!miss[r] && parse_double(raw[r], d)) col.cells[r] = d;
      }
    } else if (any && options.strict_bool &&
               all_present([](std::string_view s) { return parse_bool(s).has_value(); })) {
      col.dtype = DType::boolean;
      for (std::size_t r = 0; r < nrow; ++r) {
        if (!miss[r]) col.cells[r] = *parse_bool(raw[r]);
      }
    } else {
      std::unordered_set<std::string_view> distinct;
      for (std::size_t r = 0; r < nrow; ++r) {
        if (!miss[r]) {
          distinct.insert(raw[r]);
          col.cells[r] = std::string(raw[r]);
        }
      }
      // High-cardinality string columns are free text rather than categories.
      col.dtype = (distinct.size() > 20 && 2 * distinct.size() > present) ? DType::text : DType::categorical;
    }
    columns.push_back(std::move(col));
  }
  return Dataset(std::move(name), std::move(columns));
}

Dataset load_csv(const std::filesystem::path& path, const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw InputError("error reading file '" + path.string() + "'");
  return parse_csv(buf.str(), options, path.stem().string());
}

void write_csv(const Dataset& ds, std::ostream& out, char delimiter) {
  auto quoted = [&](const std::string& s) {
    if (s.find_first_of(std::string{delimiter, '"', '\n', '\r'}) == std::string::npos &&
        trim(s).size() == s.size()) {
      return s;
    }
    std::string q = "\"";
    for (char ch : s) {
      if (ch == '"') q += "\"\"";
      else q += ch;
    }
    return q + "\"";
  };
  for (std::size_t c = 0; c < ds.column_count(); ++c) {
    if (c) out << delimiter;
    out << quoted(ds.column(c).name);
  }
  out << '\n';
  for (std::size_t r = 0; r < ds.row_count(); ++r) {
    for (std::size_t c = 0; c < ds.column_count(); ++c) {
      if (c) out << delimiter;
      out << quoted(cell_text(ds.column(c).cells[r]));
    }
    out << '\n';
  }
}

}  // namespace leakaudit
