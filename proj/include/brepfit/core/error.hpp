// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace brepfit {

/// Base class for all brepfit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration value or unknown config key.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

/// Malformed input file (cloud, scene, or B-rep document).
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(what) {}
};

/// A pipeline stage could not produce a usable result.
class PipelineError : public Error {
public:
    explicit PipelineError(const std::string& what) : Error(what) {}
};

/// Degenerate or unfittable data handed to a fitting routine.
class FitError : public PipelineError {
public:
    explicit FitError(const std::string& what) : PipelineError(what) {}
};

} // namespace brepfit
