#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gnsstwin {

/// Writes rows to a temp file and renames into place on close, so readers
/// never observe partial files.
class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, const std::string& schema,
              const std::string& header)
        : path_(path), tmp_(path.string() + ".tmp") {
        out_.open(tmp_);
        if (!out_) throw std::runtime_error("cannot open for writing: " + tmp_.string());
        out_ << "# schema: " << schema << "\n" << header << "\n";
    }

    ~CsvWriter() {
        // Publication happens only through close(); an unwound writer leaves
        // no partial output behind.
        if (out_.is_open()) {
            out_.close();
            std::error_code ec;
            std::filesystem::remove(tmp_, ec);
        }
    }

    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    void row(const std::string& line) { out_ << line << "\n"; }

    template <typename... Args>
    void rowf(const char* fmt, Args... args) {
        char buf[512];
        std::snprintf(buf, sizeof(buf), fmt, args...);
        out_ << buf << "\n";
    }

    void close() {
        out_.close();
        std::filesystem::rename(tmp_, path_);
    }

  private:
    std::filesystem::path path_, tmp_;
    std::ofstream out_;
};

struct CsvTable {
    std::string schema;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t col(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw std::runtime_error("csv column not found: " + name);
    }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open csv: " + path.string());
    CsvTable table;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (line.rfind("# schema:", 0) == 0) {
            table.schema = line.substr(9);
            while (!table.schema.empty() && table.schema.front() == ' ')
                table.schema.erase(table.schema.begin());
            continue;
        }
        if (line[0] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        if (table.columns.empty()) {
            while (std::getline(ss, cell, ',')) table.columns.push_back(cell);
            continue;
        }
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(cell.empty() ? 0.0 : std::stod(cell));
        if (row.size() != table.columns.size())
            throw std::runtime_error("csv row width mismatch in " + path.string());
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace gnsstwin
