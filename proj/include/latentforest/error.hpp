#pragma once

#include <stdexcept>
#include <string>

namespace lf {

/** Base class of every error raised by the library. `kind()` is a stable
 *  machine-readable tag used by the CLI's JSON error output. */
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define LF_DEFINE_ERROR(Name)                                              \
    class Name : public Error {                                            \
    public:                                                                \
        explicit Name(const std::string& what = #Name) : Error(#Name, what) {} \
    }

// forest construction and combinatorics
LF_DEFINE_ERROR(CycleError);
LF_DEFINE_ERROR(DuplicateEdge);
LF_DEFINE_ERROR(ObservedDegreeError);
LF_DEFINE_ERROR(UnknownNode);
LF_DEFINE_ERROR(UnrealizablePattern);
LF_DEFINE_ERROR(TooLarge);
LF_DEFINE_ERROR(NotInLattice);
LF_DEFINE_ERROR(NotCanonical);

// closed-form RLCTs
LF_DEFINE_ERROR(NotSubforest);
LF_DEFINE_ERROR(LeafMismatch);

// monomial engine
LF_DEFINE_ERROR(EmptyZeroSet);
LF_DEFINE_ERROR(NoInteriorSolution);
LF_DEFINE_ERROR(EmptyFiber);
LF_DEFINE_ERROR(DimensionTooLarge);
LF_DEFINE_ERROR(UnsupportedDomain);
LF_DEFINE_ERROR(ArithmeticOverflow);

// Gaussian model
LF_DEFINE_ERROR(NotPositiveDefinite);
LF_DEFINE_ERROR(InvalidParams);

// selection / simulation
LF_DEFINE_ERROR(NotComparable);
LF_DEFINE_ERROR(TooFewLeaves);
LF_DEFINE_ERROR(NoSuchDepth);
LF_DEFINE_ERROR(IntegrationFailure);

// input handling
LF_DEFINE_ERROR(ParseError);
LF_DEFINE_ERROR(InvalidArgument);

#undef LF_DEFINE_ERROR

}  // namespace lf
