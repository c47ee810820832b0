#pragma once
// Report serialization: fixed-format numbers, CSV assembly, and atomic file
// replacement, so identical runs produce byte-identical outputs.

#include <singlab/errors.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <unistd.h>

namespace singlab {

// Shortest round-trippable decimal form of a double (17 significant digits).
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt(std::size_t v) { return std::to_string(v); }
inline std::string fmt(int v) { return std::to_string(v); }
inline std::string fmt(bool v) { return v ? "1" : "0"; }
inline std::string fmt(const std::string& v) { return v; }
inline std::string fmt(const char* v) { return v; }

// A rectangular CSV table: fixed column set, rows appended as pre-formatted
// cells.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void add_row(std::vector<std::string> cells) {
        if (cells.size() != columns_.size())
            throw Error("CSV row has " + std::to_string(cells.size()) + " cells; table has " +
                        std::to_string(columns_.size()) + " columns");
        rows_.push_back(std::move(cells));
    }

    std::string to_string() const {
        std::string out;
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            if (i) out += ',';
            out += columns_[i];
        }
        out += '\n';
        for (const auto& row : rows_) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) out += ',';
                out += row[i];
            }
            out += '\n';
        }
        return out;
    }

    std::size_t row_count() const { return rows_.size(); }

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

// Write content to path via a temporary file in the same directory plus an
// atomic rename, creating parent directories as needed. Readers never observe
// a partially written file.
inline void atomic_write_text(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    fs::path dir = path.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    fs::path tmp = path;
    tmp += ".tmp-" + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("failed writing " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error("failed to move " + tmp.string() + " into place: " + ec.message());
    }
}

}  // namespace singlab
