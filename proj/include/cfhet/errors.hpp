#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cfhet {

/// Base class for every error raised by the estimation library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad arguments or violated preconditions (dimension mismatch, unknown names).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class NonFiniteInput : public Error {
public:
    using Error::Error;
};

/// Numerical rank below the number of columns at relative tolerance 1e-10.
class RankDeficient : public Error {
public:
    RankDeficient(std::size_t rank, std::size_t columns, double condition_number);

    std::size_t rank() const noexcept { return rank_; }
    std::size_t columns() const noexcept { return columns_; }
    double condition_number() const noexcept { return condition_number_; }

private:
    std::size_t rank_;
    std::size_t columns_;
    double condition_number_;
};

class NonConvergence : public Error {
public:
    using Error::Error;
};

class AllResidualsZero : public Error {
public:
    using Error::Error;
};

class DegenerateInstrument : public Error {
public:
    using Error::Error;
};

class DuplicateColumn : public Error {
public:
    using Error::Error;
};

class SingularSigmaPhi : public Error {
public:
    using Error::Error;
};

class SingularSigmaAlpha : public Error {
public:
    using Error::Error;
};

class TooManyFailures : public Error {
public:
    TooManyFailures(std::size_t failed, std::size_t requested);

    std::size_t failed() const noexcept { return failed_; }

private:
    std::size_t failed_;
};

}  // namespace cfhet
