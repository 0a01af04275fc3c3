#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mgk {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define MGK_ERROR(Name)                                     \
    struct Name : Error {                                   \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

MGK_ERROR(DimensionError);
MGK_ERROR(InconsistentInput);
MGK_ERROR(InvalidHomotopy);
MGK_ERROR(DuplicateBasisName);
MGK_ERROR(MalformedGraph);
MGK_ERROR(DegreeError);
MGK_ERROR(InvalidDegree);
MGK_ERROR(WellDefinednessViolation);
MGK_ERROR(IntegrationFailure);
MGK_ERROR(NonGeneric);
MGK_ERROR(Unresolved);
MGK_ERROR(DomainError);
MGK_ERROR(ParseError);

#undef MGK_ERROR

// Thrown when a linear system has no solution. For chain complexes the
// certificate holds the homology dimension per degree.
struct NoSolution : Error {
    std::vector<std::size_t> homology;
    NoSolution(const std::string& what, std::vector<std::size_t> h)
        : Error("NoSolution: " + what), homology(std::move(h)) {}
};

// Counts that violate the boundary constraints; `rows` names the offending constraints.
struct InvalidCounts : Error {
    std::vector<std::string> rows;
    InvalidCounts(const std::string& what, std::vector<std::string> r)
        : Error("InvalidCounts: " + what), rows(std::move(r)) {}
};

}  // namespace mgk
