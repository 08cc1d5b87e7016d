#include "echomem/io.hpp"

#include "echomem/errors.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace echomem {

std::string format_sig(double v)
{
    if (std::isnan(v))
        return "null";
    if (std::isinf(v))
        return v > 0 ? "1e999" : "-1e999"; // JSON has no inf; callers avoid it
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

namespace {
void dump_rec(const Json& j, std::string& out, int indent, int depth)
{
    const std::string pad(static_cast<std::size_t>(indent * depth), ' ');
    const std::string padIn(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    switch (j.type()) {
    case Json::value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        std::size_t i = 0;
        for (auto it = j.begin(); it != j.end(); ++it, ++i) {
            out += padIn;
            out += Json(it.key()).dump();
            out += ": ";
            dump_rec(it.value(), out, indent, depth + 1);
            if (i + 1 < j.size())
                out += ",";
            out += "\n";
        }
        out += pad + "}";
        return;
    }
    case Json::value_t::array: {
        if (j.empty()) {
            out += "[]";
            return;
        }
        out += "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            out += padIn;
            dump_rec(j[i], out, indent, depth + 1);
            if (i + 1 < j.size())
                out += ",";
            out += "\n";
        }
        out += pad + "]";
        return;
    }
    case Json::value_t::number_float:
        out += format_sig(j.get<double>());
        return;
    default:
        out += j.dump();
        return;
    }
}
} // namespace

std::string dump_json(const Json& j, int indent)
{
    std::string out;
    dump_rec(j, out, indent, 0);
    out += "\n";
    return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f)
            throw ValidationError("cannot open output file: " + tmp.string());
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!f)
            throw ValidationError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void write_json_file(const std::filesystem::path& path, const Json& j)
{
    write_file_atomic(path, dump_json(j));
}

void write_waveform_csv(const std::filesystem::path& path, const Waveform& w)
{
    std::string out = "t,re_e,im_e,abs2\n";
    for (std::size_t i = 0; i < w.size(); ++i) {
        out += format_sig(w.time_at(i));
        out += ',';
        out += format_sig(w.samples[i].real());
        out += ',';
        out += format_sig(w.samples[i].imag());
        out += ',';
        out += format_sig(std::norm(w.samples[i]));
        out += '\n';
    }
    write_file_atomic(path, out);
}

void write_trace_csv(const std::filesystem::path& path, const EchoTrace& trace)
{
    std::string out = "t,re_a,im_a,intensity\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out += format_sig(trace.time_at(i));
        out += ',';
        out += format_sig(trace.amplitude[i].real());
        out += ',';
        out += format_sig(trace.amplitude[i].imag());
        out += ',';
        out += format_sig(trace.intensity[i]);
        out += '\n';
    }
    write_file_atomic(path, out);
}

void write_fringe_csv(const std::filesystem::path& path, const FringeScan& scan)
{
    std::string out = "phase,intensity\n";
    for (std::size_t i = 0; i < scan.phases.size(); ++i) {
        out += format_sig(scan.phases[i]);
        out += ',';
        out += format_sig(scan.intensities[i]);
        out += '\n';
    }
    write_file_atomic(path, out);
}

void write_table_csv(const std::filesystem::path& path,
                     const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows)
{
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        out += header[i];
        out += i + 1 < header.size() ? "," : "\n";
    }
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out += format_sig(row[i]);
            out += i + 1 < row.size() ? "," : "\n";
        }
    }
    write_file_atomic(path, out);
}

std::uint64_t fnv1a(const std::string& bytes)
{
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (const char c : bytes) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string fnv1a_hex(const std::string& bytes)
{
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a(bytes));
    return buf;
}

} // namespace echomem
