#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "slax/error.hpp"
#include "slax/mlp.hpp"
#include "slax/train.hpp"

namespace slax {

using bytes = std::vector<std::uint8_t>;

inline constexpr std::uint16_t kModelFormatMajor = 1;
inline constexpr std::uint16_t kModelFormatMinor = 0;
inline constexpr std::array<std::uint8_t, 8> kModelMagic{'S', 'L', 'A', 'X', 'R', 'M', 'D', 'L'};

namespace detail {

inline std::uint32_t crc32_ieee(const std::uint8_t* data, std::size_t len) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i)
        crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

struct ByteWriter {
    bytes out;

    void u8(std::uint8_t v) { out.push_back(v); }
    void u16(std::uint16_t v) {
        for (int i = 0; i < 2; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
};

struct ByteReader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > size) throw truncation_error("model data ends mid-field");
    }
    std::uint8_t u8() {
        need(1);
        return data[pos++];
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = 0;
        for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(data[pos + i]) << (8 * i);
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
};

} // namespace detail

// Layout: magic, format version, declared total size, method/AWET tags,
// feature intervals, dense layers, BN statistics, training metadata, then
// a CRC32 of everything before it. All integers little-endian.
inline bytes serialize_model(const RiskModel& m) {
    detail::ByteWriter w;
    for (std::uint8_t c : kModelMagic) w.u8(c);
    w.u16(kModelFormatMajor);
    w.u16(kModelFormatMinor);
    const std::size_t size_field_at = w.out.size();
    w.u64(0);
    w.u8(static_cast<std::uint8_t>(m.method));
    w.u8(m.mlp.awet_mode ? 1 : 0);
    w.u16(0);
    w.f64(m.spec.delay_lo_ms);
    w.f64(m.spec.delay_hi_ms);
    w.f64(m.spec.throughput_lo_gbps);
    w.f64(m.spec.throughput_hi_gbps);
    w.u32(static_cast<std::uint32_t>(m.mlp.layers.size()));
    for (const DenseLayer& layer : m.mlp.layers) {
        w.u32(static_cast<std::uint32_t>(layer.fan_in));
        w.u32(static_cast<std::uint32_t>(layer.fan_out));
        for (double v : layer.w) w.f64(v);
        for (double v : layer.b) w.f64(v);
    }
    w.u32(static_cast<std::uint32_t>(m.mlp.bn.size()));
    for (const BnStats& stats : m.mlp.bn) {
        w.u32(static_cast<std::uint32_t>(stats.mean.size()));
        w.f64(stats.momentum);
        w.f64(stats.eps);
        for (double v : stats.mean) w.f64(v);
        for (double v : stats.var) w.f64(v);
    }
    w.u32(m.epochs_run);
    w.f64(m.best_val_bce);
    w.f64(m.wall_ms);

    const std::uint64_t total = w.out.size() + 4;
    for (int i = 0; i < 8; ++i)
        w.out[size_field_at + static_cast<std::size_t>(i)] =
            static_cast<std::uint8_t>(total >> (8 * i));
    w.u32(detail::crc32_ieee(w.out.data(), w.out.size()));
    return w.out;
}

inline RiskModel deserialize_model(const bytes& data) {
    detail::ByteReader r{data.data(), data.size()};
    if (data.size() < kModelMagic.size() + 12) throw truncation_error("model data shorter than header");
    for (std::uint8_t c : kModelMagic)
        if (r.u8() != c) throw io_error("not a model file (bad magic)");
    const std::uint16_t major = r.u16();
    const std::uint16_t minor = r.u16();
    (void)minor;
    if (major != kModelFormatMajor)
        throw version_error("unsupported model format major version " + std::to_string(major));
    const std::uint64_t declared = r.u64();
    if (data.size() < declared) throw truncation_error("model data truncated");
    if (data.size() > declared) throw io_error("trailing bytes after model data");
    const std::uint32_t stored_crc = [&] {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(data[data.size() - 4 + static_cast<std::size_t>(i)])
                 << (8 * i);
        return v;
    }();
    if (detail::crc32_ieee(data.data(), data.size() - 4) != stored_crc)
        throw checksum_error("model checksum mismatch");

    RiskModel m;
    const std::uint8_t method_tag = r.u8();
    if (method_tag >= kAllMethods.size()) throw io_error("unknown method tag in model file");
    m.method = static_cast<MethodKind>(method_tag);
    m.mlp.awet_mode = r.u8() != 0;
    r.u16();
    m.spec.delay_lo_ms = r.f64();
    m.spec.delay_hi_ms = r.f64();
    m.spec.throughput_lo_gbps = r.f64();
    m.spec.throughput_hi_gbps = r.f64();
    const std::uint32_t n_layers = r.u32();
    if (n_layers != m.mlp.layers.size()) throw io_error("unexpected layer count in model file");
    for (std::size_t l = 0; l < m.mlp.layers.size(); ++l) {
        DenseLayer& layer = m.mlp.layers[l];
        layer.fan_in = static_cast<int>(r.u32());
        layer.fan_out = static_cast<int>(r.u32());
        if (layer.fan_in != kMlpWidths[l] || layer.fan_out != kMlpWidths[l + 1])
            throw io_error("unexpected layer shape in model file");
        layer.w.resize(static_cast<std::size_t>(layer.fan_in) *
                       static_cast<std::size_t>(layer.fan_out));
        layer.b.resize(static_cast<std::size_t>(layer.fan_out));
        for (double& v : layer.w) v = r.f64();
        for (double& v : layer.b) v = r.f64();
    }
    const std::uint32_t n_bn = r.u32();
    if (n_bn != m.mlp.bn.size()) throw io_error("unexpected BN block count in model file");
    for (std::size_t l = 0; l < m.mlp.bn.size(); ++l) {
        BnStats& stats = m.mlp.bn[l];
        const std::uint32_t width = r.u32();
        if (static_cast<int>(width) != kMlpWidths[l + 1])
            throw io_error("unexpected BN width in model file");
        stats.momentum = r.f64();
        stats.eps = r.f64();
        stats.mean.resize(width);
        stats.var.resize(width);
        for (double& v : stats.mean) v = r.f64();
        for (double& v : stats.var) v = r.f64();
    }
    m.epochs_run = r.u32();
    m.best_val_bce = r.f64();
    m.wall_ms = r.f64();
    return m;
}

inline void save_model(const RiskModel& m, const std::string& path) {
    const bytes data = serialize_model(m);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw io_error("write failed: " + path);
}

inline RiskModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open for reading: " + path);
    bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(data);
}

} // namespace slax
