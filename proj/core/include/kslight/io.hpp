#pragma once

// CSV and JSON interchange. Doubles are written in shortest round-trip form;
// NaN is written as an empty field.

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kslight/coupler.hpp"
#include "kslight/fock_state.hpp"
#include "kslight/homodyne.hpp"
#include "kslight/quadrature.hpp"
#include "kslight/reconstruction.hpp"
#include "kslight/weak.hpp"

namespace kslight {

namespace csv_header {
inline constexpr std::string_view kSweep = "delta_over_k0,A,B,theta";
inline constexpr std::string_view kRecords = "chi,psi,value";
inline constexpr std::string_view kHistogram = "e1,e2,density";
inline constexpr std::string_view kWeakRecords = "chi,p,probability,meter_expectation,phase,masked";
inline constexpr std::string_view kSurface = "p1,p2,phase,amplitude,masked";
inline constexpr std::string_view kDensity = "x,p";
inline constexpr std::string_view kWavefunction = "x1,x2,re,im";
}  // namespace csv_header

[[nodiscard]] std::string format_double(double v);
/// Empty text parses as NaN. Throws ParseError on anything else that is not a
/// complete number.
[[nodiscard]] double parse_double(std::string_view text);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Plain comma-separated text without quoting. Throws SchemaError on ragged
/// rows.
[[nodiscard]] CsvTable read_csv(std::istream& in);

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);
void write_records_csv(std::ostream& out, std::span<const HomodyneRecord> records);
/// Throws SchemaError unless the header is exactly chi,psi,value.
[[nodiscard]] std::vector<HomodyneRecord> read_records_csv(std::istream& in);
void write_histogram_csv(std::ostream& out, const Histogram2D& hist);
void write_weak_records_csv(std::ostream& out, std::span<const WeakScanRecord> records);
void write_surface_csv(std::ostream& out, const PhaseSurface& surface);
void write_density_csv(std::ostream& out, const Density1D& density);
void write_wavefunction_csv(std::ostream& out, const JointWavefunction& psi);

/// {"modes": M, "cutoff": C, "amplitudes": [[re, im], ...]} in row-major order.
[[nodiscard]] std::string state_to_json(const FockState& state);
/// Throws SchemaError on malformed documents.
[[nodiscard]] FockState state_from_json(std::string_view text);

}  // namespace kslight
