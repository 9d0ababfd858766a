#include "ra/nn.hpp"

#include <cstring>
#include <fstream>

namespace ra::nn {

namespace {

constexpr char kMagic[8] = {'R', 'A', 'Q', 'C', 'K', 'P', 'T', '1'};

void put_u32(std::ofstream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_u16(std::ofstream& os, std::uint16_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t get_u32(std::ifstream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
std::uint16_t get_u16(std::ifstream& is) {
    std::uint16_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

template <class S>
void write_impl(const std::string& path, const std::string& meta_json,
                const std::vector<ParamBlock<S>>& blocks) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    os.write(kMagic, sizeof(kMagic));
    put_u32(os, 1);
    put_u32(os, static_cast<std::uint32_t>(meta_json.size()));
    os.write(meta_json.data(), static_cast<std::streamsize>(meta_json.size()));
    put_u32(os, static_cast<std::uint32_t>(blocks.size()));
    for (const auto& b : blocks) {
        put_u16(os, static_cast<std::uint16_t>(b.name.size()));
        os.write(b.name.data(), static_cast<std::streamsize>(b.name.size()));
        const std::uint8_t sw = sizeof(S);
        os.write(reinterpret_cast<const char*>(&sw), 1);
        put_u32(os, static_cast<std::uint32_t>(b.rows()));
        put_u32(os, static_cast<std::uint32_t>(b.cols()));
        os.write(reinterpret_cast<const char*>(b.data()),
                 static_cast<std::streamsize>(sizeof(S) * b.size()));
    }
    if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

} // namespace

void write_checkpoint_file(const std::string& path, const std::string& meta_json,
                           const std::vector<ParamBlock<float>>& blocks) {
    write_impl(path, meta_json, blocks);
}
void write_checkpoint_file(const std::string& path, const std::string& meta_json,
                           const std::vector<ParamBlock<double>>& blocks) {
    write_impl(path, meta_json, blocks);
}

const LoadedBlock& LoadedCheckpoint::find(const std::string& name) const {
    for (const auto& b : blocks)
        if (b.name == name) return b;
    throw std::runtime_error("checkpoint is missing parameter block: " + name);
}

LoadedCheckpoint read_checkpoint_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    const std::uint32_t version = get_u32(is);
    if (version != 1) throw std::runtime_error("unsupported checkpoint version");
    LoadedCheckpoint ck;
    const std::uint32_t meta_len = get_u32(is);
    ck.meta_json.resize(meta_len);
    is.read(ck.meta_json.data(), meta_len);
    const std::uint32_t count = get_u32(is);
    ck.blocks.resize(count);
    for (auto& b : ck.blocks) {
        const std::uint16_t name_len = get_u16(is);
        b.name.resize(name_len);
        is.read(b.name.data(), name_len);
        std::uint8_t sw = 0;
        is.read(reinterpret_cast<char*>(&sw), 1);
        b.scalar_width = sw;
        b.rows = get_u32(is);
        b.cols = get_u32(is);
        const size_t n = static_cast<size_t>(b.rows) * static_cast<size_t>(b.cols);
        b.values.resize(n);
        if (sw == 4) {
            std::vector<float> tmp(n);
            is.read(reinterpret_cast<char*>(tmp.data()),
                    static_cast<std::streamsize>(n * 4));
            for (size_t i = 0; i < n; ++i) b.values[i] = tmp[i];
        } else if (sw == 8) {
            is.read(reinterpret_cast<char*>(b.values.data()),
                    static_cast<std::streamsize>(n * 8));
        } else {
            throw std::runtime_error("bad scalar width in checkpoint");
        }
    }
    if (!is) throw std::runtime_error("truncated checkpoint: " + path);
    return ck;
}

} // namespace ra::nn
