// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0
//
// Shared plumbing for the text file formats: locale-independent number
// parsing with precise error positions, and the fixed 17-significant-digit
// float formatting every writer uses so output is byte-stable.

#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "brepfit/core/error.hpp"

namespace brepfit {
namespace detail {

/// Fixed formatting for doubles in all text writers: 17 significant digits
/// round-trip exactly and produce identical bytes across runs.
inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

/// Splits a line on spaces/tabs/CR; empty tokens are dropped.
inline std::vector<std::string_view> split_tokens(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    const auto is_space = [](char c) {
        return c == ' ' || c == '\t' || c == '\r' || c == '\n';
    };
    while (i < line.size()) {
        while (i < line.size() && is_space(line[i])) ++i;
        std::size_t j = i;
        while (j < line.size() && !is_space(line[j])) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

[[noreturn]] inline void parse_fail(const std::string& origin, int line_no,
                                    const std::string& message) {
    std::ostringstream os;
    os << origin << ":" << line_no << ": " << message;
    throw ParseError(os.str());
}

/// Locale-independent double parse of a whole token. Accepts an optional
/// leading '+', which std::from_chars alone does not.
inline bool parse_double_token(std::string_view tok, double& out) {
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    if (tok.empty()) return false;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

inline bool parse_int_token(std::string_view tok, long long& out) {
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    if (tok.empty()) return false;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

inline double require_double(std::string_view tok, const std::string& origin,
                             int line_no, const char* what) {
    double v = 0.0;
    if (!parse_double_token(tok, v))
        parse_fail(origin, line_no,
                   std::string("expected a number for ") + what + ", got '" +
                       std::string(tok) + "'");
    return v;
}

inline long long require_int(std::string_view tok, const std::string& origin,
                             int line_no, const char* what) {
    long long v = 0;
    if (!parse_int_token(tok, v))
        parse_fail(origin, line_no,
                   std::string("expected an integer for ") + what + ", got '" +
                       std::string(tok) + "'");
    return v;
}

/// getline that strips a trailing CR so CRLF files parse like LF files.
inline bool next_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

} // namespace detail
} // namespace brepfit
