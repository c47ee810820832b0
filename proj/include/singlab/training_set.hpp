#pragma once

#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "singlab/errors.hpp"

namespace singlab {

// A finite set of training points in R^d with optional small-integer class
// labels. Points are stored flat (row-major) so hot loops can walk them
// without pointer chasing.
class TrainingSet {
  public:
    TrainingSet(std::size_t dim, std::vector<double> flat, std::vector<int> labels = {})
        : dim_(dim), data_(std::move(flat)), labels_(std::move(labels)) {
        if (dim_ == 0) throw DomainError("training set dimension must be positive");
        if (data_.empty() || data_.size() % dim_ != 0)
            throw DomainError("training set data size must be a positive multiple of dim");
        std::size_t n = data_.size() / dim_;
        if (!labels_.empty() && labels_.size() != n)
            throw DomainError("training set labels must align with points");
        for (double v : data_)
            if (!std::isfinite(v)) throw DomainError("training set contains a non-finite value");
        for (std::size_t i = 0; i < labels_.size(); ++i)
            class_index_[labels_[i]].push_back(i);
    }

    static TrainingSet from_rows(const std::vector<std::vector<double>>& rows,
                                 std::vector<int> labels = {}) {
        if (rows.empty()) throw DomainError("training set needs at least one point");
        std::size_t d = rows.front().size();
        std::vector<double> flat;
        flat.reserve(rows.size() * d);
        for (const auto& r : rows) {
            if (r.size() != d) throw DomainError("training set rows must share one dimension");
            flat.insert(flat.end(), r.begin(), r.end());
        }
        return TrainingSet(d, std::move(flat), std::move(labels));
    }

    std::size_t size() const { return data_.size() / dim_; }
    std::size_t dim() const { return dim_; }
    bool has_labels() const { return !labels_.empty(); }
    const std::vector<int>& labels() const { return labels_; }
    int label(std::size_t i) const { return labels_.at(i); }

    std::span<const double> point(std::size_t i) const {
        return std::span<const double>(data_.data() + i * dim_, dim_);
    }

    // Indices of the points carrying `label`; throws if the label is unknown.
    const std::vector<std::size_t>& class_indices(int label) const {
        auto it = class_index_.find(label);
        if (it == class_index_.end())
            throw UnknownLabel("label " + std::to_string(label) + " not present in training set");
        return it->second;
    }

    std::vector<int> distinct_labels() const {
        std::vector<int> out;
        out.reserve(class_index_.size());
        for (const auto& [lab, idx] : class_index_) out.push_back(lab);
        return out;
    }

    // Mean of all points, or of one class when a label is given.
    std::vector<double> mean(std::optional<int> label = std::nullopt) const {
        std::vector<double> m(dim_, 0.0);
        if (label) {
            const auto& idx = class_indices(*label);
            for (std::size_t i : idx) {
                auto p = point(i);
                for (std::size_t k = 0; k < dim_; ++k) m[k] += p[k];
            }
            for (double& v : m) v /= static_cast<double>(idx.size());
        } else {
            std::size_t n = size();
            for (std::size_t i = 0; i < n; ++i) {
                auto p = point(i);
                for (std::size_t k = 0; k < dim_; ++k) m[k] += p[k];
            }
            for (double& v : m) v /= static_cast<double>(n);
        }
        return m;
    }

  private:
    std::size_t dim_;
    std::vector<double> data_;
    std::vector<int> labels_;
    std::map<int, std::vector<std::size_t>> class_index_;
};

namespace detail {

inline bool parse_double(const std::string& tok, double& out) {
    const char* b = tok.c_str();
    char* end = nullptr;
    out = std::strtod(b, &end);
    return end != b && *end == '\0' && std::isfinite(out);
}

inline std::string trim(std::string s) {
    auto issp = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
    while (!s.empty() && issp(s.front())) s.erase(s.begin());
    while (!s.empty() && issp(s.back())) s.pop_back();
    return s;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(trim(tok));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

}  // namespace detail

// Load a training set from CSV: one point per row, comma separated. An
// optional first header row is detected by non-numeric tokens; the file is
// treated as labeled iff the header's last column is named `label`, in which
// case the last value of each row is an integer class id. Headerless files
// are all-numeric and unlabeled.
inline TrainingSet load_training_set_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open CSV file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        line = detail::trim(line);
        if (!line.empty()) lines.push_back(line);
    }
    if (lines.empty()) throw DomainError("CSV file is empty: " + path);

    bool labeled = false;
    std::size_t first_row = 0;
    {
        auto toks = detail::split_csv_line(lines[0]);
        double v;
        bool numeric = true;
        for (const auto& t : toks)
            if (!detail::parse_double(t, v)) numeric = false;
        if (!numeric) {
            first_row = 1;
            labeled = !toks.empty() && toks.back() == "label";
            if (lines.size() == 1) throw DomainError("CSV file has a header but no data: " + path);
        }
    }

    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (std::size_t li = first_row; li < lines.size(); ++li) {
        auto toks = detail::split_csv_line(lines[li]);
        std::vector<double> row;
        row.reserve(toks.size());
        for (const auto& t : toks) {
            double v;
            if (!detail::parse_double(t, v))
                throw DomainError("CSV row " + std::to_string(li + 1) + " has a non-numeric field '" +
                                  t + "' in " + path);
            row.push_back(v);
        }
        if (labeled) {
            if (row.size() < 2)
                throw DomainError("labeled CSV rows need at least one coordinate plus the label");
            double lab = row.back();
            row.pop_back();
            if (lab != std::floor(lab) || std::abs(lab) > 1e9)
                throw DomainError("CSV label on row " + std::to_string(li + 1) +
                                  " is not a small integer");
            labels.push_back(static_cast<int>(lab));
        }
        rows.push_back(std::move(row));
    }
    return TrainingSet::from_rows(rows, std::move(labels));
}

// Built-in datasets used by the examples and the test suite:
//   two-point       1D {-1, +1} with labels {0, 1}
//   brightness-toy  16D all-minus-ones (label 0, "dark") and all-ones (label 1, "bright")
//   grid-9          2D 3x3 lattice {-1,0,1}^2, unlabeled
inline TrainingSet builtin_training_set(const std::string& name) {
    if (name == "two-point")
        return TrainingSet(1, {-1.0, 1.0}, {0, 1});
    if (name == "brightness-toy") {
        std::size_t d = 16;
        std::vector<double> flat(2 * d);
        for (std::size_t k = 0; k < d; ++k) {
            flat[k] = -1.0;
            flat[d + k] = 1.0;
        }
        return TrainingSet(d, std::move(flat), {0, 1});
    }
    if (name == "grid-9") {
        std::vector<double> flat;
        for (double a : {-1.0, 0.0, 1.0})
            for (double b : {-1.0, 0.0, 1.0}) {
                flat.push_back(a);
                flat.push_back(b);
            }
        return TrainingSet(2, std::move(flat));
    }
    throw DomainError("unknown builtin training set: " + name +
                      " (expected two-point, brightness-toy, or grid-9)");
}

}  // namespace singlab
