// SPDX-License-Identifier: MIT
#pragma once

#include <stdexcept>
#include <string>

namespace translog {

/// Base class for all diagnostics raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Operands live at different iterated-logarithm depths.
class DepthMismatch : public Error {
public:
    using Error::Error;
};

/// A coefficient was requested at a key the truncation cannot answer for.
class RegionExceeded : public Error {
public:
    using Error::Error;
};

/// Zero series where a nonzero one is required (inverse, leading term).
class ZeroInput : public Error {
public:
    using Error::Error;
};

/// Input map is not tangent to the identity.
class NotParabolic : public Error {
public:
    using Error::Error;
};

/// The working region is too small to reach the residual key or another
/// quantity the requested computation must see.
class RegionTooSmall : public Error {
public:
    using Error::Error;
};

/// The right-hand side of a Lie-bracket solve carries a term at the residual
/// key, which the bracket operator cannot produce.
class ResidualObstruction : public Error {
public:
    using Error::Error;
};

/// A fixed-point iteration failed to make strict order progress.
class NonContraction : public Error {
public:
    using Error::Error;
};

/// An iteration exceeded its configured budget.
class MaxIterationsExceeded : public Error {
public:
    using Error::Error;
};

/// An always-on internal cross-check failed (pipeline vs. closed formula,
/// escalation residual, substitute-back residuals).
class InvariantViolation : public Error {
public:
    using Error::Error;
};

/// Series-expression or file syntax error (CLI front end).
class ParseError : public Error {
public:
    using Error::Error;
};

} // namespace translog
