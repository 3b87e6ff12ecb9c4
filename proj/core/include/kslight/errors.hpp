#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kslight {

// Every domain failure derives from Error; kind() is the stable type name the
// CLI prints and maps to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    [[nodiscard]] virtual std::string_view kind() const noexcept = 0;
};

#define KSLIGHT_DEFINE_ERROR(Name)                                        \
    class Name final : public Error {                                     \
    public:                                                               \
        using Error::Error;                                               \
        [[nodiscard]] std::string_view kind() const noexcept override {   \
            return #Name;                                                 \
        }                                                                 \
    };

// coupler-core
KSLIGHT_DEFINE_ERROR(InvalidSettings)
KSLIGHT_DEFINE_ERROR(TargetUnreachable)
KSLIGHT_DEFINE_ERROR(NonMonotoneWindow)
KSLIGHT_DEFINE_ERROR(StepTooCoarse)

// state-core
KSLIGHT_DEFINE_ERROR(TruncationOverflow)
KSLIGHT_DEFINE_ERROR(GridTooNarrow)

// homodyne-sim
KSLIGHT_DEFINE_ERROR(InvalidConfig)
KSLIGHT_DEFINE_ERROR(InsufficientAngles)
KSLIGHT_DEFINE_ERROR(FitDiverged)

// weak-values
KSLIGHT_DEFINE_ERROR(OrthogonalPostselection)
KSLIGHT_DEFINE_ERROR(EmptyPostselection)
KSLIGHT_DEFINE_ERROR(TooFewAngles)
KSLIGHT_DEFINE_ERROR(NotReconstructible)

// cli / io
KSLIGHT_DEFINE_ERROR(NormalizationError)
KSLIGHT_DEFINE_ERROR(SchemaError)

#undef KSLIGHT_DEFINE_ERROR

// Parse failures carry the byte offset into the offending text.
class ParseError final : public Error {
public:
    ParseError(const std::string& what, std::size_t position)
        : Error(what + " (at position " + std::to_string(position) + ")"),
          position_(position) {}
    [[nodiscard]] std::string_view kind() const noexcept override { return "ParseError"; }
    [[nodiscard]] std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

}  // namespace kslight
