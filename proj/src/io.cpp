#include "cascade/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "cascade/model.hpp"

namespace cascade {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string Provenance::line() const {
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash));
    return "# cascade " + version + " config=" + hash + " seed=" + std::to_string(seed);
}

CsvWriter::CsvWriter(std::ostream& out, const Provenance& prov, std::initializer_list<std::string_view> header)
    : out_(out) {
    for (auto h : header) header_.emplace_back(h);
    out_ << prov.line() << '\n';
}

CsvWriter::CsvWriter(std::ostream& out, const Provenance& prov, const std::vector<std::string>& header)
    : out_(out), header_(header) {
    out_ << prov.line() << '\n';
}

void CsvWriter::comment(std::string_view text) {
    if (header_written_) throw std::logic_error("CSV comments must precede the header");
    out_ << "# " << text << '\n';
}

void CsvWriter::write_header() {
    for (std::size_t i = 0; i < header_.size(); ++i) out_ << (i ? "," : "") << header_[i];
    out_ << '\n';
    header_written_ = true;
}

CsvWriter& CsvWriter::cell(std::string_view v) {
    if (!header_written_) write_header();
    out_ << (row_open_ ? "," : "") << v;
    row_open_ = true;
    ++cells_;
    return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(std::string_view(format_double(v))); }
CsvWriter& CsvWriter::cell(std::int64_t v) { return cell(std::string_view(std::to_string(v))); }

void CsvWriter::finish() {
    if (!header_written_) write_header();
}

void CsvWriter::end_row() {
    if (!header_written_) write_header();
    if (cells_ != header_.size()) throw std::logic_error("CSV row width does not match the header");
    out_ << '\n';
    row_open_ = false;
    cells_ = 0;
}

double parse_double(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ValidationError("not a number: '" + std::string(text) + "'");
    return v;
}

TauSample read_tau_sample(std::istream& in) {
    TauSample s;
    bool have_T = false, have_header = false;
    std::string line;
    std::size_t lineno = 0;
    std::size_t column = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto pos = line.find("T=");
            if (pos != std::string::npos && (pos == 1 || line[pos - 1] == ' ')) {
                auto rest = std::string_view(line).substr(pos + 2);
                rest = rest.substr(0, rest.find_first_of(" \t,"));
                s.T = parse_double(rest);
                have_T = true;
            }
            continue;
        }
        std::vector<std::string_view> fields;
        for (std::string_view rest = line;;) {
            const auto comma = rest.find(',');
            fields.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (!have_header) {
            const auto it = std::find(fields.begin(), fields.end(), "t");
            if (it == fields.end()) throw ValidationError("TauSample CSV header has no 't' column");
            column = static_cast<std::size_t>(it - fields.begin());
            have_header = true;
            continue;
        }
        if (column >= fields.size())
            throw ValidationError("TauSample CSV line " + std::to_string(lineno) + " has too few fields");
        try {
            s.times.push_back(parse_double(fields[column]));
        } catch (const ValidationError& e) {
            throw ValidationError("TauSample CSV line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!have_T) throw ValidationError("TauSample CSV lacks the '# T=<horizon>' line");
    if (!have_header) throw ValidationError("TauSample CSV lacks the 't' header");
    std::sort(s.times.begin(), s.times.end());
    validate_tau_sample(s);
    return s;
}

TauSample read_tau_sample_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open TauSample file '" + path + "'");
    return read_tau_sample(in);
}

void write_tau_sample(std::ostream& out, const TauSample& sample, const Provenance& prov) {
    CsvWriter csv(out, prov, {"t"});
    csv.comment("T=" + format_double(sample.T));
    for (double t : sample.times) {
        csv.cell(t);
        csv.end_row();
    }
    csv.finish();
}

}  // namespace cascade
