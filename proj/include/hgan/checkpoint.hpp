// Checkpoint persistence. Layout: magic "HGCK", u32 version, then a
// count-prefixed list of named tensors (u32 name length, name bytes, u32
// rank, u32 extents, f64 little-endian values). Everything in the file —
// network parameters, Adam state, step counter, seed, and the config echo —
// is encoded as such a tensor, so save -> load -> save is byte-identical by
// construction.

#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hgan/config.hpp"
#include "hgan/optim.hpp"
#include "hgan/train.hpp"

namespace hgan {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'H', 'G', 'C', 'K'};

// Incompatibility (bad magic, wrong version, shape mismatch) maps to CLI
// exit code 4; plain I/O failure is a std::runtime_error.
struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Checkpoint {
    std::uint32_t version = kCheckpointVersion;
    std::vector<NamedParam> tensors;

    const Tensor* find(const std::string& name) const {
        for (const auto& t : tensors)
            if (t.name == name) return &t.value;
        return nullptr;
    }
    const Tensor& at(const std::string& name) const {
        const Tensor* t = find(name);
        if (!t) throw CheckpointError("checkpoint: missing tensor '" + name + "'");
        return *t;
    }
};

namespace detail {

inline void put_string_tensor(Checkpoint& ck, const std::string& name, const std::string& text) {
    std::vector<double> bytes(text.size());
    for (std::size_t i = 0; i < text.size(); ++i)
        bytes[i] = static_cast<double>(static_cast<unsigned char>(text[i]));
    ck.tensors.push_back({name, Tensor::from(std::move(bytes), {text.size()})});
}

inline std::string get_string_tensor(const Checkpoint& ck, const std::string& name) {
    const Tensor& t = ck.at(name);
    std::string text(t.size(), '\0');
    for (std::size_t i = 0; i < t.size(); ++i)
        text[i] = static_cast<char>(static_cast<unsigned char>(t.values()[i]));
    return text;
}

// 64-bit integers ride as (hi32, lo32) pairs; doubles carry 32-bit halves
// exactly.
inline void put_u64_tensor(Checkpoint& ck, const std::string& name, std::uint64_t v) {
    ck.tensors.push_back(
        {name, Tensor::from({static_cast<double>(v >> 32), static_cast<double>(v & 0xffffffffu)},
                            {2})});
}

inline std::uint64_t get_u64_tensor(const Checkpoint& ck, const std::string& name) {
    const Tensor& t = ck.at(name);
    if (t.size() != 2) throw CheckpointError("checkpoint: malformed u64 tensor '" + name + "'");
    return (static_cast<std::uint64_t>(t.values()[0]) << 32) |
           static_cast<std::uint64_t>(t.values()[1]);
}

inline void write_exact(std::ofstream& out, const void* data, std::size_t n) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

inline void read_exact(std::ifstream& in, void* data, std::size_t n) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
        throw CheckpointError("checkpoint: truncated file");
}

inline void put_ck_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    write_exact(out, b, 4);
}

inline std::uint32_t get_ck_u32(std::ifstream& in) {
    unsigned char b[4];
    read_exact(in, b, 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_ck_f64(std::ofstream& out, double v) {
    std::uint64_t bits;
    static_assert(sizeof bits == sizeof v);
    __builtin_memcpy(&bits, &v, sizeof bits);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    write_exact(out, b, 8);
}

inline double get_ck_f64(std::ifstream& in) {
    unsigned char b[8];
    read_exact(in, b, 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    __builtin_memcpy(&v, &bits, sizeof v);
    return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
    detail::write_exact(out, kCheckpointMagic, 4);
    detail::put_ck_u32(out, ck.version);
    detail::put_ck_u32(out, static_cast<std::uint32_t>(ck.tensors.size()));
    for (const auto& [name, tensor] : ck.tensors) {
        detail::put_ck_u32(out, static_cast<std::uint32_t>(name.size()));
        detail::write_exact(out, name.data(), name.size());
        detail::put_ck_u32(out, static_cast<std::uint32_t>(tensor.shape().size()));
        for (std::size_t e : tensor.shape())
            detail::put_ck_u32(out, static_cast<std::uint32_t>(e));
        for (double v : tensor.values()) detail::put_ck_f64(out, v);
    }
    if (!out) throw std::runtime_error("checkpoint: write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("checkpoint: cannot open: " + path);
    char magic[4];
    detail::read_exact(in, magic, 4);
    if (std::string_view(magic, 4) != std::string_view(kCheckpointMagic, 4))
        throw CheckpointError("checkpoint: bad magic (not an HGCK file)");
    Checkpoint ck;
    ck.version = detail::get_ck_u32(in);
    if (ck.version != kCheckpointVersion)
        throw CheckpointError("checkpoint: version " + std::to_string(ck.version) +
                              " unsupported (expected " + std::to_string(kCheckpointVersion) +
                              ")");
    const std::uint32_t count = detail::get_ck_u32(in);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = detail::get_ck_u32(in);
        std::string name(name_len, '\0');
        detail::read_exact(in, name.data(), name_len);
        const std::uint32_t rank = detail::get_ck_u32(in);
        Shape shape(rank);
        std::size_t size = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            shape[r] = detail::get_ck_u32(in);
            size *= shape[r];
        }
        std::vector<double> values(size);
        for (double& v : values) v = detail::get_ck_f64(in);
        ck.tensors.push_back({std::move(name), Tensor::from(std::move(values), shape)});
    }
    return ck;
}

namespace detail {

inline void put_adam_state(Checkpoint& ck, const std::string& prefix, const Adam& opt) {
    put_u64_tensor(ck, prefix + ".steps", opt.steps_taken());
    for (std::size_t i = 0; i < opt.params().size(); ++i) {
        const auto& p = opt.params()[i];
        const auto& slot = opt.slot(i);
        ck.tensors.push_back(
            {prefix + ".m." + p.name, Tensor::from(slot.m, {slot.m.size()})});
        ck.tensors.push_back(
            {prefix + ".v." + p.name, Tensor::from(slot.v, {slot.v.size()})});
    }
}

inline void get_adam_state(const Checkpoint& ck, const std::string& prefix, Adam& opt) {
    opt.set_steps_taken(get_u64_tensor(ck, prefix + ".steps"));
    for (std::size_t i = 0; i < opt.params().size(); ++i) {
        const auto& p = opt.params()[i];
        const Tensor& m = ck.at(prefix + ".m." + p.name);
        const Tensor& v = ck.at(prefix + ".v." + p.name);
        auto& slot = opt.slot(i);
        if (m.size() != slot.m.size() || v.size() != slot.v.size())
            throw CheckpointError("checkpoint: optimizer state size mismatch for " + p.name);
        slot.m = m.values();
        slot.v = v.values();
    }
}

inline void copy_params(const Checkpoint& ck, const std::string& prefix, NetworkParams params) {
    for (auto& p : params) {
        const Tensor& stored = ck.at(prefix + "." + p.name);
        if (stored.shape() != p.value.shape())
            throw CheckpointError("checkpoint: shape mismatch for parameter " + p.name);
        p.value.values() = stored.values();
    }
}

}  // namespace detail

// Snapshot a trainer. The config echo carries everything needed to rebuild
// the nets; RNG streams are pure functions of (seed, step), so the step
// counter alone resumes them exactly.
inline Checkpoint checkpoint_of(const Trainer& trainer, const ExperimentConfig& config) {
    Checkpoint ck;
    detail::put_string_tensor(ck, "meta.config", serialize_config(config));
    detail::put_string_tensor(ck, "meta.variant", config.variant);
    detail::put_u64_tensor(ck, "meta.step", trainer.steps_done());
    detail::put_u64_tensor(ck, "meta.seed", config.seed);
    for (const auto& p : trainer.nets().g.params()) ck.tensors.push_back({"param." + p.name, p.value});
    for (const auto& p : trainer.nets().d.params()) ck.tensors.push_back({"param." + p.name, p.value});
    for (const auto& p : trainer.nets().ar.params())
        ck.tensors.push_back({"param." + p.name, p.value});
    detail::put_adam_state(ck, "adam.d", trainer.opt_d());
    detail::put_adam_state(ck, "adam.g", trainer.opt_g());
    detail::put_adam_state(ck, "adam.ar", trainer.opt_ar());
    return ck;
}

struct RestoredRun {
    ExperimentConfig config;
    Trainer trainer;
};

// Rebuild a trainer from a checkpoint: parse the config echo, construct
// fresh nets/optimizers, then overwrite every parameter and optimizer slot.
inline RestoredRun restore_trainer(const Checkpoint& ck) {
    ExperimentConfig config = parse_config(detail::get_string_tensor(ck, "meta.config"));
    if (detail::get_string_tensor(ck, "meta.variant") != config.variant)
        throw CheckpointError("checkpoint: variant tag disagrees with config echo");
    RestoredRun run{config, Trainer(config.train_config())};
    detail::copy_params(ck, "param", run.trainer.nets().g.params());
    detail::copy_params(ck, "param", run.trainer.nets().d.params());
    detail::copy_params(ck, "param", run.trainer.nets().ar.params());
    detail::get_adam_state(ck, "adam.d", run.trainer.opt_d());
    detail::get_adam_state(ck, "adam.g", run.trainer.opt_g());
    detail::get_adam_state(ck, "adam.ar", run.trainer.opt_ar());
    run.trainer.set_steps_done(detail::get_u64_tensor(ck, "meta.step"));
    return run;
}

}  // namespace hgan
