#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace htq {

// Job counts are exact integers throughout; doubles appear only in statistics.
using IVec = std::vector<long long>;
using DVec = std::vector<double>;

inline long long idot(const IVec& a, const IVec& b) {
    long long s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double dot(const DVec& a, const DVec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double dot(const DVec& a, const IVec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * static_cast<double>(b[i]);
    return s;
}

inline long long isum(const IVec& a) {
    long long s = 0;
    for (long long v : a) s += v;
    return s;
}

inline double norm2(const DVec& a) { return std::sqrt(dot(a, a)); }

inline std::string vec_str(const IVec& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s + ")";
}

inline std::string vec_str(const DVec& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s + ")";
}

}  // namespace htq
