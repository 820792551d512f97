#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "stn/search.hpp"
#include "stn/tensor.hpp"
#include "stn/trainer.hpp"

namespace stn {

/// Shortest round-trip decimal form so replayed files are bitwise identical.
inline std::string fmt_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline void write_schedule_csv(const std::filesystem::path& path, const ScheduleLog& log) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "step,epoch";
    for (const auto& n : log.names) out << ',' << n << "_raw," << n << "_constrained," << n << "_sigma";
    out << ",train_loss,valid_obj\n";
    for (const auto& r : log.rows) {
        out << r.step << ',' << r.epoch;
        for (std::size_t j = 0; j < log.names.size(); ++j)
            out << ',' << fmt_double(r.raw[j]) << ',' << fmt_double(r.constrained[j]) << ','
                << fmt_double(r.sigma[j]);
        out << ',' << fmt_double(r.train_loss) << ',' << fmt_double(r.valid_obj) << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline ScheduleLog read_schedule_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("empty schedule file " + path.string());
    std::vector<std::string> cols;
    {
        std::stringstream ss(header);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
    }
    if (cols.size() < 4 || cols[0] != "step" || cols[1] != "epoch" ||
        cols[cols.size() - 2] != "train_loss" || cols.back() != "valid_obj" ||
        (cols.size() - 4) % 3 != 0)
        throw std::runtime_error("malformed schedule header in " + path.string());
    ScheduleLog log;
    std::size_t n = (cols.size() - 4) / 3;
    for (std::size_t j = 0; j < n; ++j) {
        std::string raw_col = cols[2 + 3 * j];
        if (raw_col.size() < 4 || raw_col.substr(raw_col.size() - 4) != "_raw")
            throw std::runtime_error("malformed schedule header in " + path.string());
        log.names.push_back(raw_col.substr(0, raw_col.size() - 4));
    }
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> f;
        while (std::getline(ss, field, ',')) f.push_back(field);
        if (f.size() != cols.size()) throw std::runtime_error("malformed schedule row in " + path.string());
        ScheduleRow r;
        r.step = std::stoull(f[0]);
        r.epoch = std::stoull(f[1]);
        for (std::size_t j = 0; j < n; ++j) {
            r.raw.push_back(std::stod(f[2 + 3 * j]));
            r.constrained.push_back(std::stod(f[3 + 3 * j]));
            r.sigma.push_back(std::stod(f[4 + 3 * j]));
        }
        r.train_loss = std::stod(f[f.size() - 2]);
        r.valid_obj = std::stod(f.back());
        log.rows.push_back(std::move(r));
    }
    return log;
}

inline void write_metrics_jsonl(const std::filesystem::path& path,
                                const std::vector<EpochMetrics>& metrics) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (const auto& m : metrics) {
        nlohmann::json j{{"epoch", m.epoch},
                         {"train_loss", m.train_loss},
                         {"valid_loss", m.valid_loss},
                         {"test_loss", m.test_loss},
                         {"wall_seconds", m.wall_seconds}};
        out << j.dump() << '\n';
    }
}

inline std::vector<EpochMetrics> read_metrics_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<EpochMetrics> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        EpochMetrics m;
        m.epoch = j.at("epoch").get<std::size_t>();
        m.train_loss = j.at("train_loss").get<double>();
        m.valid_loss = j.at("valid_loss").get<double>();
        m.test_loss = j.at("test_loss").get<double>();
        m.wall_seconds = j.at("wall_seconds").get<double>();
        out.push_back(m);
    }
    return out;
}

inline void write_search_csv(const std::filesystem::path& path, const SearchResult& result,
                             const std::vector<std::string>& hyper_names) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "trial";
    for (const auto& n : hyper_names) out << ',' << n;
    out << ",valid_loss,test_loss,wall_seconds,best_so_far\n";
    for (std::size_t i = 0; i < result.trials.size(); ++i) {
        const auto& t = result.trials[i];
        out << i;
        for (const auto& n : hyper_names) out << ',' << fmt_double(t.spec.assignment.at(n));
        out << ',' << fmt_double(t.valid_loss) << ',' << fmt_double(t.test_loss) << ','
            << fmt_double(t.wall_seconds) << ',' << fmt_double(result.best_so_far[i]) << '\n';
    }
}

// --- checkpoint: "STN1" magic, then per tensor a length-prefixed name,
// a rank + uint64 dims header, and float64 little-endian data. ---

namespace detail {

inline void put_u64(std::ofstream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_u64(std::ifstream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw std::runtime_error("truncated checkpoint");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline void put_f64(std::ofstream& out, double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    put_u64(out, v);
}

inline double get_f64(std::ifstream& in) {
    std::uint64_t v = get_u64(in);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
}

}  // namespace detail

inline void write_checkpoint(const std::filesystem::path& path,
                             const std::vector<std::pair<std::string, Tensor>>& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write("STN1", 4);
    detail::put_u64(out, tensors.size());
    for (const auto& [name, t] : tensors) {
        detail::put_u64(out, name.size());
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        detail::put_u64(out, t.rank());
        for (std::size_t d : t.shape()) detail::put_u64(out, d);
        for (std::size_t i = 0; i < t.size(); ++i) detail::put_f64(out, t.at(i));
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline std::vector<std::pair<std::string, Tensor>> read_checkpoint(
    const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "STN1", 4) != 0)
        throw std::runtime_error("bad checkpoint magic in " + path.string());
    std::uint64_t count = detail::get_u64(in);
    std::vector<std::pair<std::string, Tensor>> out;
    for (std::uint64_t k = 0; k < count; ++k) {
        std::uint64_t name_len = detail::get_u64(in);
        std::string name(name_len, '\0');
        in.read(name.data(), static_cast<std::streamsize>(name_len));
        std::uint64_t rank = detail::get_u64(in);
        Shape shape;
        for (std::uint64_t d = 0; d < rank; ++d) shape.push_back(detail::get_u64(in));
        Tensor t = Tensor::zeros(shape);
        for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = detail::get_f64(in);
        if (!in) throw std::runtime_error("truncated checkpoint " + path.string());
        out.emplace_back(std::move(name), std::move(t));
    }
    return out;
}

}  // namespace stn
