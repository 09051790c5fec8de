#include "evt/checkpoint.hpp"

#include <cstring>

#include "evt/common.hpp"

namespace evt {

namespace {

constexpr char kMagic[8] = {'E', 'C', 'V', 'T', 'C', 'K', '0', '1'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

void put_f64(std::string& out, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    put_u64(out, u);
}

void put_doubles(std::string& out, std::span<const double> values) {
    put_u64(out, values.size());
    for (double v : values) put_f64(out, v);
}

struct Reader {
    const std::string& bytes;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > bytes.size()) throw IoError("checkpoint truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int b = 0; b < 4; ++b)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + b])) << (8 * b);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int b = 0; b < 8; ++b)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + b])) << (8 * b);
        pos += 8;
        return v;
    }
    double f64() {
        const std::uint64_t u = u64();
        double v;
        std::memcpy(&v, &u, 8);
        return v;
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s = bytes.substr(pos, n);
        pos += n;
        return s;
    }
    std::vector<double> doubles() {
        const std::uint64_t n = u64();
        std::vector<double> v(n);
        for (auto& x : v) x = f64();
        return v;
    }
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.adam_m.size() != ckpt.params.count() || ckpt.adam_v.size() != ckpt.params.count())
        throw ContractError("checkpoint moments must match parameter count");

    std::string out(kMagic, sizeof kMagic);
    put_u64(out, ckpt.step);
    put_u64(out, ckpt.adam_step_count);
    put_u64(out, ckpt.rng_state);
    put_u32(out, static_cast<std::uint32_t>(ckpt.config_json.size()));
    out += ckpt.config_json;
    put_u32(out, static_cast<std::uint32_t>(ckpt.params.count()));
    std::size_t pi = 0;
    for (const auto& [name, t] : ckpt.params.entries()) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        put_u32(out, static_cast<std::uint32_t>(t.shape().size()));
        for (int d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
        put_doubles(out, t.data());
        put_doubles(out, ckpt.adam_m[pi]);
        put_doubles(out, ckpt.adam_v[pi]);
        ++pi;
    }
    return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
    Reader r{bytes};
    if (r.str(sizeof kMagic) != std::string(kMagic, sizeof kMagic))
        throw IoError("not a checkpoint file");

    Checkpoint ckpt;
    ckpt.step = r.u64();
    ckpt.adam_step_count = r.u64();
    ckpt.rng_state = r.u64();
    ckpt.config_json = r.str(r.u32());
    const std::uint32_t n_params = r.u32();
    for (std::uint32_t i = 0; i < n_params; ++i) {
        const std::string name = r.str(r.u32());
        const std::uint32_t ndim = r.u32();
        std::vector<int> shape;
        for (std::uint32_t d = 0; d < ndim; ++d) shape.push_back(static_cast<int>(r.u32()));
        std::vector<double> data = r.doubles();
        ckpt.params.add(name, Tensor::from_data(shape, std::move(data)));
        ckpt.adam_m.push_back(r.doubles());
        ckpt.adam_v.push_back(r.doubles());
    }
    if (r.pos != bytes.size()) throw IoError("trailing bytes in checkpoint");
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    atomic_write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) {
    return decode_checkpoint(read_file(path));
}

}  // namespace evt
