#pragma once

#include <stdexcept>
#include <string>

namespace dualmv {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain (negative level, non-unit direction, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Operation requested for a sphere dimension it does not support.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Wrong number of arguments for an n-ary operation.
class ArityError : public Error {
public:
    using Error::Error;
};

/// Grid-backed data referenced two different grids.
class GridMismatch : public Error {
public:
    using Error::Error;
};

/// Regions cannot be refined exactly into a common partition without a grid.
class RequiresRasterization : public Error {
public:
    using Error::Error;
};

/// Exact grids exist only for n = 2 and n = 3.
class UnsupportedExactGrid : public Error {
public:
    using Error::Error;
};

/// Rotation that does not permute the cells of the grid backing the data.
class UnsupportedRotation : public Error {
public:
    using Error::Error;
};

/// Enumeration would exceed the configured evaluation budget.
class BudgetExceeded : public Error {
public:
    using Error::Error;
};

/// Every sampled tuple had zero dual mixed volume.
class DegenerateSample : public Error {
public:
    using Error::Error;
};

/// Parameter rejected by a constructor or factory.
class InvalidParameter : public Error {
public:
    using Error::Error;
};

}  // namespace dualmv
