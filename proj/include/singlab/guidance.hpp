#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "singlab/errors.hpp"

namespace singlab {

// Classifier-free guidance configuration. A guided model output combines a
// positive-condition branch and a negative branch (a concrete class, or the
// unconditional model when neg_label is empty):
//
//     u = o_neg + w (o_pos - o_neg),   w >= 1.
//
// The combined posterior-mean output at the pure-noise endpoint must be
// rescaled by 1/w to keep its magnitude compatible with a standard-Gaussian
// state (normalize_initial); interior noise-prediction outputs are used
// unnormalized.
struct GuidanceConfig {
    double scale = 1.0;
    bool normalize_initial = true;
    int pos_label = 0;
    std::optional<int> neg_label;  // empty = unconditional negative branch
};

// Combine a positive and a negative model output with guidance scale w,
// optionally dividing the result by w. Exact identities of the formula are
// honored bitwise: w == 1 returns o_pos unchanged, and an all-zero negative
// output under normalization returns o_pos / 1 = o_pos unchanged (the general
// rounding of (o_neg + w(o_pos-o_neg))/w would lose both).
inline std::vector<double> guided_combine(std::span<const double> o_pos,
                                          std::span<const double> o_neg, double w,
                                          bool normalize) {
    if (!(w >= 1.0)) throw DomainError("guidance scale must satisfy w >= 1, got " + std::to_string(w));
    if (o_pos.size() != o_neg.size())
        throw DomainError("guided_combine: branch outputs differ in dimension");
    std::vector<double> out(o_pos.begin(), o_pos.end());
    if (w == 1.0) return out;
    bool neg_zero = true;
    for (double v : o_neg)
        if (v != 0.0) neg_zero = false;
    if (normalize && neg_zero) return out;
    for (std::size_t k = 0; k < out.size(); ++k) {
        double u = o_neg[k] + w * (o_pos[k] - o_neg[k]);
        out[k] = normalize ? u / w : u;
    }
    return out;
}

}  // namespace singlab
