#pragma once

#include <stdexcept>
#include <string>

namespace tenrank {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Operands have incompatible shapes or vector lengths.
struct DimensionMismatch : Error {
    using Error::Error;
};

/// A tensor or candidate file could not be parsed.
struct ParseError : Error {
    using Error::Error;
};

/// The (multilinear rank, hyperdeterminant) reading matches no row of the
/// classification table at the given tolerance.
struct ClassificationAmbiguous : Error {
    using Error::Error;
};

/// Tangency recovery was asked for a tensor that is not in the
/// rank-three, border-rank-two class.
struct NotTangentClass : Error {
    using Error::Error;
};

/// A slice pencil determinant is identically zero beyond tolerance, so no
/// double root can be extracted.
struct DegeneratePencil : Error {
    using Error::Error;
};

/// The rank-two candidate has no shared factor direction in any mode.
struct NotDeficient : Error {
    using Error::Error;
};

/// The candidate's second-mode factors are dependent: it is rank at most
/// one and should be handled by the low-rank fill path.
struct DegenerateSecondMode : Error {
    using Error::Error;
};

/// An iteration could not produce a usable decrease within its budget.
struct NumericalStall : Error {
    using Error::Error;
};

} // namespace tenrank
