#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>

namespace mwlab {

// 17 significant digits, the format of every float in a report.
std::string format_double(double v);

// RFC-4180 field quoting: fields containing a comma, quote, CR or LF are
// wrapped in quotes with inner quotes doubled.
std::string csv_field(std::string_view s);

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    CsvWriter& field(std::string_view s);
    CsvWriter& field(double v);
    CsvWriter& field(std::int64_t v);
    CsvWriter& field(std::uint64_t v);
    CsvWriter& field(int v) { return field(static_cast<std::int64_t>(v)); }
    void end_row();

    void header(std::initializer_list<std::string_view> names);

private:
    std::ostream& out_;
    bool first_ = true;
};

// Runs body(i) for i in [0, n) on up to `threads` workers. Work is handed out
// by index, so results written to per-index slots are independent of the
// thread count. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

// FNV-1a 64-bit digest, hex encoded.
std::string fnv1a_hex(std::string_view data);

}  // namespace mwlab
