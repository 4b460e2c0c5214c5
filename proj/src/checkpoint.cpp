#include "see360/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

namespace see360 {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'S', '3', '6', '0'};

template <typename T>
void put_raw(std::vector<std::uint8_t>& out, T v)
{
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& b) : bytes_(b) {}

    template <typename T>
    T take()
    {
        T v;
        std::memcpy(&v, need(sizeof(T)), sizeof(T));
        return v;
    }
    const std::uint8_t* need(std::size_t n)
    {
        if (bytes_.size() - pos_ < n)
            throw FormatError("checkpoint truncated at byte " + std::to_string(pos_));
        const auto* p = bytes_.data() + pos_;
        pos_ += n;
        return p;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

template <typename S>
constexpr DType dtype_of()
{
    return std::is_same_v<S, float> ? DType::F32 : DType::F64;
}

}  // namespace

std::int64_t TensorRecord::numel() const
{
    std::int64_t n = 1;
    for (auto d : dims)
        n *= d;
    return n;
}

ModelConfig Checkpoint::model() const
{
    KeyValues kv = config;
    return ModelConfig::read(kv);
}

const TensorRecord* Checkpoint::find(const std::string& name) const
{
    for (const auto& r : records)
        if (r.name == name)
            return &r;
    return nullptr;
}

template <typename S>
void Checkpoint::put(const std::string& name, const Tensor<S>& t)
{
    if (find(name))
        throw CheckpointError("duplicate tensor name '" + name + "'");
    TensorRecord r;
    r.name = name;
    r.dtype = dtype_of<S>();
    r.dims.assign(t.shape().begin(), t.shape().end());
    r.bytes.resize(static_cast<std::size_t>(t.size()) * sizeof(S));
    if (t.size())
        std::memcpy(r.bytes.data(), t.data().data(), r.bytes.size());
    records.push_back(std::move(r));
}

void Checkpoint::put_i64(const std::string& name, std::int64_t value)
{
    if (find(name))
        throw CheckpointError("duplicate tensor name '" + name + "'");
    TensorRecord r;
    r.name = name;
    r.dtype = DType::I64;
    r.bytes.resize(8);
    std::memcpy(r.bytes.data(), &value, 8);
    records.push_back(std::move(r));
}

template <typename S>
void Checkpoint::get(const std::string& name, Tensor<S>& into) const
{
    const TensorRecord* r = find(name);
    if (!r)
        throw UnknownTensorError("checkpoint has no tensor '" + name + "'");
    if (r->dtype != dtype_of<S>())
        throw FormatError("tensor '" + name + "' has a different element type");
    if (!std::equal(r->dims.begin(), r->dims.end(), into.shape().begin(), into.shape().end()))
        throw ConfigConflict("tensor '" + name + "' is stored with a different shape");
    if (into.size())
        std::memcpy(into.mutable_data().data(), r->bytes.data(), r->bytes.size());
}

std::int64_t Checkpoint::get_i64(const std::string& name) const
{
    const TensorRecord* r = find(name);
    if (!r)
        throw UnknownTensorError("checkpoint has no tensor '" + name + "'");
    if (r->dtype != DType::I64 || r->numel() != 1)
        throw FormatError("tensor '" + name + "' is not an integer scalar");
    std::int64_t v;
    std::memcpy(&v, r->bytes.data(), 8);
    return v;
}

std::vector<std::uint8_t> serialize(const Checkpoint& c)
{
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_raw<std::uint32_t>(out, Checkpoint::kVersion);
    const std::string cfg = format_key_values(c.config);
    put_raw<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.size()));
    out.insert(out.end(), cfg.begin(), cfg.end());
    put_raw<std::uint64_t>(out, c.iteration);
    put_raw<std::uint32_t>(out, static_cast<std::uint32_t>(c.records.size()));
    for (const auto& r : c.records) {
        if (r.bytes.size() != static_cast<std::size_t>(r.numel()) * r.element_size())
            throw FormatError("tensor '" + r.name + "' payload does not match its dims");
        put_raw<std::uint32_t>(out, static_cast<std::uint32_t>(r.name.size()));
        out.insert(out.end(), r.name.begin(), r.name.end());
        put_raw<std::uint8_t>(out, static_cast<std::uint8_t>(r.dtype));
        put_raw<std::uint32_t>(out, static_cast<std::uint32_t>(r.dims.size()));
        for (auto d : r.dims)
            put_raw<std::int64_t>(out, d);
        out.insert(out.end(), r.bytes.begin(), r.bytes.end());
    }
    return out;
}

Checkpoint deserialize(const std::vector<std::uint8_t>& bytes)
{
    Reader in(bytes);
    if (bytes.size() < 4 || std::memcmp(in.need(4), kMagic, 4) != 0)
        throw FormatError("not a checkpoint (bad magic bytes)");
    const auto version = in.take<std::uint32_t>();
    if (version != Checkpoint::kVersion)
        throw VersionError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                           std::to_string(Checkpoint::kVersion) + ")");
    Checkpoint c;
    const auto cfg_len = in.take<std::uint32_t>();
    const auto* cfg = in.need(cfg_len);
    try {
        c.config = parse_key_values(std::string(reinterpret_cast<const char*>(cfg), cfg_len));
    } catch (const ConfigError& e) {
        throw FormatError(std::string("checkpoint config block: ") + e.what());
    }
    c.iteration = in.take<std::uint64_t>();
    const auto count = in.take<std::uint32_t>();
    std::set<std::string> seen;
    for (std::uint32_t i = 0; i < count; ++i) {
        TensorRecord r;
        const auto name_len = in.take<std::uint32_t>();
        r.name.assign(reinterpret_cast<const char*>(in.need(name_len)), name_len);
        if (!seen.insert(r.name).second)
            throw FormatError("duplicate tensor name '" + r.name + "'");
        const auto tag = in.take<std::uint8_t>();
        if (tag > 2)
            throw FormatError("tensor '" + r.name + "' has unknown dtype tag " + std::to_string(tag));
        r.dtype = static_cast<DType>(tag);
        const auto rank = in.take<std::uint32_t>();
        if (rank > 8)
            throw FormatError("tensor '" + r.name + "' has implausible rank " + std::to_string(rank));
        for (std::uint32_t k = 0; k < rank; ++k) {
            const auto d = in.take<std::int64_t>();
            if (d < 0 || d > (std::int64_t{1} << 32))
                throw FormatError("tensor '" + r.name + "' has an invalid extent");
            r.dims.push_back(d);
        }
        const auto n = static_cast<std::size_t>(r.numel()) * r.element_size();
        const auto* p = in.need(n);
        r.bytes.assign(p, p + n);
        c.records.push_back(std::move(r));
    }
    if (!in.done())
        throw FormatError("trailing bytes after the last checkpoint record");
    return c;
}

void save_checkpoint(const Checkpoint& c, const std::string& path)
{
    const auto bytes = serialize(c);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!f)
            throw CheckpointError("cannot write " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw CheckpointError("cannot move checkpoint into place at " + path);
}

Checkpoint load_checkpoint(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw CheckpointError("cannot open checkpoint " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

void require_image_size(const Checkpoint& c, int width, int height)
{
    const auto m = c.model();
    if (m.image_width != width || m.image_height != height)
        throw ConfigConflict("checkpoint was trained at " + std::to_string(m.image_width) + "x" +
                             std::to_string(m.image_height) + " but " + std::to_string(width) + "x" +
                             std::to_string(height) + " was requested");
}

template <typename S>
void store_params(Checkpoint& c, const NamedParams<S>& params, const Adam<S>* opt)
{
    for (const auto& [name, t] : params)
        c.put(name, *t);
    if (!opt)
        return;
    const auto& names = opt->params();
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto& st = opt->states()[i];
        const Shape& shape = names[i].second->shape();
        const std::string base = "adam." + names[i].first;
        c.put(base + ".m", Tensor<S>(shape, st.m));
        c.put(base + ".v", Tensor<S>(shape, st.v));
        c.put_i64(base + ".t", st.t);
    }
}

template <typename S>
void restore_params(const Checkpoint& c, const NamedParams<S>& params, Adam<S>* opt)
{
    for (const auto& [name, t] : params)
        c.get(name, *t);
    if (!opt)
        return;
    const auto& names = opt->params();
    for (std::size_t i = 0; i < names.size(); ++i) {
        auto& st = opt->states()[i];
        const Shape& shape = names[i].second->shape();
        const std::string base = "adam." + names[i].first;
        Tensor<S> m(shape), v(shape);
        c.get(base + ".m", m);
        c.get(base + ".v", v);
        st.m = m.data();
        st.v = v.data();
        st.t = c.get_i64(base + ".t");
    }
}

std::vector<std::string> unclaimed_records(const Checkpoint& c, const std::vector<std::string>& claimed)
{
    const std::set<std::string> known(claimed.begin(), claimed.end());
    std::vector<std::string> out;
    for (const auto& r : c.records)
        if (!known.count(r.name))
            out.push_back(r.name);
    return out;
}

template void Checkpoint::put(const std::string&, const Tensor<float>&);
template void Checkpoint::put(const std::string&, const Tensor<double>&);
template void Checkpoint::get(const std::string&, Tensor<float>&) const;
template void Checkpoint::get(const std::string&, Tensor<double>&) const;
template void store_params(Checkpoint&, const NamedParams<float>&, const Adam<float>*);
template void store_params(Checkpoint&, const NamedParams<double>&, const Adam<double>*);
template void restore_params(const Checkpoint&, const NamedParams<float>&, Adam<float>*);
template void restore_params(const Checkpoint&, const NamedParams<double>&, Adam<double>*);

}  // namespace see360
