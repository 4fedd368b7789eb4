// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace dlczsim {

/// Parameter outside its documented domain (eta < 0, chi >= 1, ...).
class DomainError : public std::invalid_argument {
public:
    explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

/// Operand dimensions do not match (operator vs. register, state vs. state).
class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

/// Structured input failed validation (non-unitary matrix, incomplete POVM,
/// unphysical density operator, malformed config).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// The requested heralding outcome has zero probability.
class HeraldImpossibleError : public std::runtime_error {
public:
    explicit HeraldImpossibleError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace dlczsim
