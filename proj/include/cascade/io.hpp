#pragma once

// CSV emission and the TauSample file format.
//
// Every CSV starts with one provenance comment line
//   # cascade <version> config=<16 hex digits> seed=<u64>
// Numbers use the shortest decimal form that round-trips, independent of locale.

#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "cascade/ips.hpp"

namespace cascade {

/// Shortest round-trip decimal representation ("inf", "-inf", "nan" for non-finite).
std::string format_double(double v);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

struct Provenance {
    std::string version;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;

    std::string line() const;
};

class CsvWriter {
public:
    CsvWriter(std::ostream& out, const Provenance& prov, std::initializer_list<std::string_view> header);
    CsvWriter(std::ostream& out, const Provenance& prov, const std::vector<std::string>& header);

    /// Extra `# key=value` metadata line; only valid before the first row.
    void comment(std::string_view text);

    CsvWriter& cell(double v);
    CsvWriter& cell(std::int64_t v);
    CsvWriter& cell(std::uint64_t v) { return cell(static_cast<std::int64_t>(v)); }
    CsvWriter& cell(int v) { return cell(static_cast<std::int64_t>(v)); }
    CsvWriter& cell(std::string_view v);
    void end_row();
    /// Emit the header if no row has been written yet.
    void finish();

private:
    void write_header();

    std::ostream& out_;
    std::vector<std::string> header_;
    bool header_written_ = false;
    bool row_open_ = false;
    std::size_t cells_ = 0;
};

/// Parse a TauSample CSV: comment lines, one of which is `# T=<horizon>`, then
/// a header with a `t` column, then one time per row.
TauSample read_tau_sample(std::istream& in);
TauSample read_tau_sample_file(const std::string& path);
void write_tau_sample(std::ostream& out, const TauSample& sample, const Provenance& prov);

/// Strict decimal parse of a whole field.
double parse_double(std::string_view text);

}  // namespace cascade
