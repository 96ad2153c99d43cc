#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "synthnet/util.hpp"

namespace synthnet::csv {

// Header-indexed CSV table. Fields are kept as strings; typed access goes
// through the Row helpers, which report file/line/column on bad data.
class Table {
  public:
    std::string path;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    bool has_column(const std::string& name) const { return index_.count(name) > 0; }

    std::size_t column(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) {
            throw DataError(path + ": missing column '" + name + "'");
        }
        return it->second;
    }

    const std::string& cell(std::size_t row, std::size_t col) const { return rows[row][col]; }

    const std::string& cell(std::size_t row, const std::string& col) const {
        return rows[row][column(col)];
    }

    double num(std::size_t row, const std::string& col) const {
        const std::string& s = cell(row, col);
        bool ok = false;
        double v = parse_double(s, ok);
        if (!ok) {
            throw DataError(path + ":" + std::to_string(row + 2) + ": column '" + col +
                            "': not a number: '" + s + "'");
        }
        return v;
    }

    int64_t integer(std::size_t row, const std::string& col) const {
        const std::string& s = cell(row, col);
        bool ok = false;
        int64_t v = parse_int(s, ok);
        if (!ok) {
            throw DataError(path + ":" + std::to_string(row + 2) + ": column '" + col +
                            "': not an integer: '" + s + "'");
        }
        return v;
    }

    void build_index() {
        index_.clear();
        for (std::size_t i = 0; i < header.size(); ++i) index_[header[i]] = i;
    }

  private:
    std::unordered_map<std::string, std::size_t> index_;
};

inline std::vector<std::string> split_line(const std::string& line, const std::string& path,
                                           std::size_t lineno) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) {
        throw DataError(path + ":" + std::to_string(lineno) + ": unterminated quote");
    }
    fields.push_back(cur);
    return fields;
}

inline Table read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    Table t;
    t.path = path.filename().string();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && lineno > 1) continue;
        auto fields = split_line(line, t.path, lineno);
        if (lineno == 1) {
            t.header = std::move(fields);
        } else {
            if (fields.size() != t.header.size()) {
                throw DataError(t.path + ":" + std::to_string(lineno) + ": expected " +
                                std::to_string(t.header.size()) + " fields, got " +
                                std::to_string(fields.size()));
            }
            t.rows.push_back(std::move(fields));
        }
    }
    if (t.header.empty()) throw DataError(t.path + ": empty file");
    t.build_index();
    return t;
}

class Writer {
  public:
    explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
        if (!out_) throw DataError("cannot write " + path.string());
    }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            write_field(fields[i]);
        }
        out_ << '\n';
    }

  private:
    void write_field(const std::string& f) {
        bool needs_quote = f.find_first_of(",\"\n") != std::string::npos;
        if (!needs_quote) {
            out_ << f;
            return;
        }
        out_ << '"';
        for (char c : f) {
            if (c == '"') out_ << '"';
            out_ << c;
        }
        out_ << '"';
    }

    std::ofstream out_;
};

}  // namespace synthnet::csv
