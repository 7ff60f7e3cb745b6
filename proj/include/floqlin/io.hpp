// Copyright 2026 The floqlin Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Output formats: CSV tables, 16-bit PGM heatmaps, and atomic multi-file
// commits.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "floqlin/errors.hpp"
#include "floqlin/phase_space.hpp"

namespace floqlin::io {

inline std::uint64_t fnv1a64(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// 17 significant digits round-trips every double.
inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    CsvTable& row(std::vector<std::string> cells) {
        if (cells.size() != header_.size()) throw DimensionMismatchError("io", "CSV row width mismatch");
        rows_.push_back(std::move(cells));
        return *this;
    }

    [[nodiscard]] std::size_t size() const noexcept { return rows_.size(); }

    [[nodiscard]] std::string render(const std::string& config_hash) const {
        std::string out = "# config_hash=" + config_hash + "\n";
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) out += ',';
                out += cells[i];
            }
            out += '\n';
        };
        line(header_);
        for (const auto& r : rows_) line(r);
        return out;
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

struct PgmScale {
    double w_min = 0.0;
    double w_max = 0.0;
};

// Binary 16-bit PGM, rows in order of increasing p, big-endian samples,
// value = round(65535 (W − Wmin) / (Wmax − Wmin)).
inline std::string render_pgm(const WignerGrid& g, const std::string& config_hash, PgmScale* scale = nullptr) {
    double lo = g.values.empty() ? 0.0 : g.values.front();
    double hi = lo;
    for (double v : g.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (scale) *scale = {lo, hi};
    std::string out = "P5\n# config_hash=" + config_hash + "\n" + std::to_string(g.nx) + " " +
                      std::to_string(g.ny) + "\n65535\n";
    out.reserve(out.size() + 2 * g.values.size());
    const double span = hi - lo;
    for (double v : g.values) {
        const auto q = span > 0.0 ? static_cast<std::uint16_t>(std::lround(65535.0 * (v - lo) / span)) : 0;
        out.push_back(static_cast<char>(q >> 8));
        out.push_back(static_cast<char>(q & 0xff));
    }
    return out;
}

struct PgmImage {
    std::size_t width = 0, height = 0;
    std::string comment;
    std::vector<std::uint16_t> samples;
};

inline PgmImage parse_pgm(const std::string& bytes) {
    std::istringstream in(bytes);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw PreconditionError("io", "not a binary PGM");
    PgmImage img;
    in >> std::ws;
    while (in.peek() == '#') {
        std::string line;
        std::getline(in, line);
        img.comment += line.substr(1);
        in >> std::ws;
    }
    unsigned maxval = 0;
    in >> img.width >> img.height >> maxval;
    in.get();
    if (maxval != 65535) throw PreconditionError("io", "expected a 16-bit PGM");
    img.samples.resize(img.width * img.height);
    for (auto& s : img.samples) {
        const int hi = in.get();
        const int lo = in.get();
        if (!in) throw PreconditionError("io", "truncated PGM");
        s = static_cast<std::uint16_t>((hi << 8) | lo);
    }
    return img;
}

// Stages files next to their destination and renames them together on
// commit. Anything staged or renamed is removed if the commit does not finish.
class AtomicOutputs {
public:
    explicit AtomicOutputs(std::filesystem::path dir) : dir_(std::move(dir)) {}
    AtomicOutputs(const AtomicOutputs&) = delete;
    AtomicOutputs& operator=(const AtomicOutputs&) = delete;

    ~AtomicOutputs() {
        if (!committed_) rollback();
    }

    void stage(const std::string& name, const std::string& content) {
        std::filesystem::create_directories(dir_);
        const auto final_path = dir_ / name;
        const auto tmp = dir_ / ("." + name + ".partial");
        {
            std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
            if (!f) throw PreconditionError("io", "cannot write " + tmp.string());
            f.write(content.data(), static_cast<std::streamsize>(content.size()));
            if (!f) throw PreconditionError("io", "write failed for " + tmp.string());
        }
        staged_.emplace_back(tmp, final_path);
    }

    void commit() {
        for (const auto& [tmp, dst] : staged_) {
            std::filesystem::rename(tmp, dst);
            renamed_.push_back(dst);
        }
        committed_ = true;
    }

    void rollback() noexcept {
        std::error_code ec;
        for (const auto& [tmp, dst] : staged_) std::filesystem::remove(tmp, ec);
        for (const auto& dst : renamed_) std::filesystem::remove(dst, ec);
        staged_.clear();
        renamed_.clear();
    }

    [[nodiscard]] std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& s : staged_) out.push_back(s.second.filename().string());
        return out;
    }

private:
    std::filesystem::path dir_;
    std::vector<std::pair<std::filesystem::path, std::filesystem::path>> staged_;
    std::vector<std::filesystem::path> renamed_;
    bool committed_ = false;
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw PreconditionError("io", "cannot read " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace floqlin::io
