#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "see360/config.hpp"
#include "see360/optim.hpp"

namespace see360 {

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
/// Bad magic, truncation, trailing bytes or malformed records.
class FormatError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};
class VersionError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};
/// A record the model does not know, or a parameter without a record.
class UnknownTensorError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};
class ConfigConflict : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};

enum class DType : std::uint8_t { F32 = 0, F64 = 1, I64 = 2 };

struct TensorRecord {
    std::string name;
    DType dtype = DType::F32;
    std::vector<std::int64_t> dims;
    std::vector<std::uint8_t> bytes;  // little-endian raw values

    std::size_t element_size() const { return dtype == DType::F32 ? 4 : 8; }
    std::int64_t numel() const;
    bool operator==(const TensorRecord&) const = default;
};

/// Layout (little-endian): "S360", u32 version, u32 n + n bytes of `key = value`
/// config text, u64 iteration, u32 record count, then per record: u32 name
/// length, name, u8 dtype (0 f32, 1 f64, 2 i64), u32 rank, rank x i64 dims,
/// raw values.
struct Checkpoint {
    static constexpr std::uint32_t kVersion = 1;

    KeyValues config;
    std::uint64_t iteration = 0;
    std::vector<TensorRecord> records;

    ModelConfig model() const;
    const TensorRecord* find(const std::string& name) const;

    template <typename Scalar>
    void put(const std::string& name, const Tensor<Scalar>& t);
    void put_i64(const std::string& name, std::int64_t value);

    /// Copies a record into an existing leaf of the same shape.
    template <typename Scalar>
    void get(const std::string& name, Tensor<Scalar>& into) const;
    std::int64_t get_i64(const std::string& name) const;

    bool operator==(const Checkpoint&) const = default;
};

std::vector<std::uint8_t> serialize(const Checkpoint& c);
Checkpoint deserialize(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Throws ConfigConflict when the stored image size differs from the requested one.
void require_image_size(const Checkpoint& c, int width, int height);

/// Parameters plus Adam moments under "adam.<param>.m/.v/.t".
template <typename Scalar>
void store_params(Checkpoint& c, const NamedParams<Scalar>& params, const Adam<Scalar>* opt = nullptr);

/// Restores every listed parameter (and moments, when given). Records in the
/// checkpoint that nothing claims are reported by `unclaimed_records`.
template <typename Scalar>
void restore_params(const Checkpoint& c, const NamedParams<Scalar>& params, Adam<Scalar>* opt = nullptr);

std::vector<std::string> unclaimed_records(const Checkpoint& c, const std::vector<std::string>& claimed);

}  // namespace see360
