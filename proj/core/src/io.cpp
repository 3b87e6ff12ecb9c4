#include "kslight/io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "kslight/errors.hpp"

namespace kslight {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

void write_row(std::ostream& out, std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
        if (!first) out << ',';
        out << format_double(v);
        first = false;
    }
    out << '\n';
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return {};
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

double parse_double(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    if (text.empty()) return std::numeric_limits<double>::quiet_NaN();
    if (text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw ParseError("not a number: '" + std::string(text) + "'",
                         static_cast<std::size_t>(res.ptr - text.data()));
    }
    return v;
}

CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line);
        if (!have_header) {
            t.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != t.header.size()) {
            throw SchemaError("row " + std::to_string(t.rows.size() + 1) + " has " + std::to_string(fields.size()) +
                              " fields, header has " + std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(fields));
    }
    if (!have_header) throw SchemaError("empty CSV input");
    return t;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
    out << csv_header::kSweep << '\n';
    for (const auto& r : rows) write_row(out, {r.delta_over_k0, r.a_coef, r.b_coef, r.theta});
}

void write_records_csv(std::ostream& out, std::span<const HomodyneRecord> records) {
    out << csv_header::kRecords << '\n';
    for (const auto& r : records) write_row(out, {r.chi, r.psi, r.value});
}

std::vector<HomodyneRecord> read_records_csv(std::istream& in) {
    const CsvTable t = read_csv(in);
    std::string header;
    for (std::size_t i = 0; i < t.header.size(); ++i) header += (i ? "," : "") + t.header[i];
    if (header != csv_header::kRecords) {
        throw SchemaError("expected header '" + std::string(csv_header::kRecords) + "', got '" + header + "'");
    }
    std::vector<HomodyneRecord> out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        HomodyneRecord r{parse_double(row[0]), parse_double(row[1]), parse_double(row[2])};
        if (!std::isfinite(r.chi) || !std::isfinite(r.psi) || !std::isfinite(r.value)) {
            throw SchemaError("record fields must be finite");
        }
        out.push_back(r);
    }
    return out;
}

void write_histogram_csv(std::ostream& out, const Histogram2D& hist) {
    out << csv_header::kHistogram << '\n';
    for (std::size_t i = 0; i < hist.bins; ++i) {
        for (std::size_t j = 0; j < hist.bins; ++j) write_row(out, {hist.center(i), hist.center(j), hist.at(i, j)});
    }
}

void write_weak_records_csv(std::ostream& out, std::span<const WeakScanRecord> records) {
    out << csv_header::kWeakRecords << '\n';
    for (const auto& r : records) {
        out << format_double(r.chi) << ',' << format_double(r.p) << ',' << format_double(r.probability) << ','
            << format_double(r.meter_expectation) << ',' << format_double(r.masked ? std::nan("") : r.phase) << ','
            << (r.masked ? 1 : 0) << '\n';
    }
}

void write_surface_csv(std::ostream& out, const PhaseSurface& s) {
    out << csv_header::kSurface << '\n';
    for (std::size_t i = 0; i < s.p1.points; ++i) {
        for (std::size_t j = 0; j < s.p2.points; ++j) {
            const std::size_t k = s.index(i, j);
            out << format_double(s.p1.at(i)) << ',' << format_double(s.p2.at(j)) << ','
                << format_double(s.masked[k] ? std::nan("") : s.phase[k]) << ',' << format_double(s.amplitude[k]) << ','
                << static_cast<int>(s.masked[k]) << '\n';
        }
    }
}

void write_density_csv(std::ostream& out, const Density1D& d) {
    out << csv_header::kDensity << '\n';
    for (std::size_t i = 0; i < d.values.size(); ++i) write_row(out, {d.grid.at(i), d.values[i]});
}

void write_wavefunction_csv(std::ostream& out, const JointWavefunction& psi) {
    out << csv_header::kWavefunction << '\n';
    for (std::size_t i = 0; i < psi.grid1.points; ++i) {
        for (std::size_t j = 0; j < psi.grid2.points; ++j) {
            const cplx v = psi(i, j);
            write_row(out, {psi.grid1.at(i), psi.grid2.at(j), v.real(), v.imag()});
        }
    }
}

std::string state_to_json(const FockState& state) {
    nlohmann::ordered_json j;
    j["modes"] = state.modes();
    j["cutoff"] = state.cutoff();
    auto& amps = j["amplitudes"] = nlohmann::ordered_json::array();
    for (const auto& c : state.amplitudes()) amps.push_back({c.real(), c.imag()});
    return j.dump();
}

FockState state_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("state JSON: ") + e.what(), e.byte);
    }
    try {
        const int modes = j.value("modes", 2);
        const int cutoff = j.at("cutoff").get<int>();
        const auto& list = j.at("amplitudes");
        if (!list.is_array()) throw SchemaError("amplitudes must be an array");
        std::vector<cplx> amps;
        amps.reserve(list.size());
        for (const auto& pair : list) {
            if (!pair.is_array() || pair.size() != 2) throw SchemaError("each amplitude must be [re, im]");
            amps.emplace_back(pair[0].get<double>(), pair[1].get<double>());
        }
        return FockState(modes, cutoff, std::move(amps));
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("state JSON: ") + e.what());
    } catch (const InvalidConfig& e) {
        throw SchemaError(std::string("state JSON: ") + e.what());
    }
}

}  // namespace kslight
