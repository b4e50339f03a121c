#pragma once

#include <Eigen/Core>

#include <numeric>
#include <string>
#include <vector>

#include "asyncfb/errors.hpp"

namespace asyncfb {

using Index = Eigen::Index;

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/**
 * Split of a product space H = H_1 x ... x H_N into N blocks.
 *
 * Block i owns coordinates [offset(i), offset(i) + dim(i)).
 */
class BlockPartition
{
public:
    BlockPartition() = default;

    explicit BlockPartition(std::vector<Index> dims)
        : dims_(std::move(dims))
    {
        if (dims_.empty()) {
            throw ContractViolation("BlockPartition: need at least one block");
        }
        offsets_.reserve(dims_.size() + 1);
        offsets_.push_back(0);
        for (auto d : dims_) {
            if (d < 1) {
                throw ContractViolation("BlockPartition: block sizes must be >= 1");
            }
            offsets_.push_back(offsets_.back() + d);
        }
    }

    /// N equal blocks of size n.
    static BlockPartition uniform(Index n_blocks, Index block_dim)
    {
        return BlockPartition(std::vector<Index>(static_cast<std::size_t>(n_blocks), block_dim));
    }

    Index size() const { return static_cast<Index>(dims_.size()); }
    Index dim(Index i) const { return dims_[static_cast<std::size_t>(i)]; }
    Index offset(Index i) const { return offsets_[static_cast<std::size_t>(i)]; }
    Index total() const { return offsets_.empty() ? 0 : offsets_.back(); }
    const std::vector<Index>& dims() const { return dims_; }

    template <class Derived>
    void check_conforms(const Eigen::MatrixBase<Derived>& x, const char* who) const
    {
        if (x.size() != total()) {
            throw ContractViolation(std::string(who) + ": vector of length " + std::to_string(x.size())
                                    + " does not match partition dimension " + std::to_string(total()));
        }
    }

    friend bool operator==(const BlockPartition& a, const BlockPartition& b) { return a.dims_ == b.dims_; }

private:
    std::vector<Index> dims_;
    std::vector<Index> offsets_;
};

/// Block i of x as a writable segment.
template <class Derived>
auto block(Eigen::MatrixBase<Derived>& x, const BlockPartition& p, Index i)
{
    return x.segment(p.offset(i), p.dim(i));
}

template <class Derived>
auto block(const Eigen::MatrixBase<Derived>& x, const BlockPartition& p, Index i)
{
    return x.segment(p.offset(i), p.dim(i));
}

/// Element of the product space: coordinates plus the partition that names its blocks.
template <class Scalar>
class BlockVector
{
public:
    BlockVector() = default;

    explicit BlockVector(BlockPartition partition)
        : partition_(std::move(partition)), data_(Vector<Scalar>::Zero(partition_.total())) {}

    BlockVector(BlockPartition partition, Vector<Scalar> data)
        : partition_(std::move(partition)), data_(std::move(data))
    {
        partition_.check_conforms(data_, "BlockVector");
    }

    const BlockPartition& partition() const { return partition_; }
    Index n_blocks() const { return partition_.size(); }

    auto block(Index i) { return data_.segment(partition_.offset(i), partition_.dim(i)); }
    auto block(Index i) const { return data_.segment(partition_.offset(i), partition_.dim(i)); }

    Vector<Scalar>& data() { return data_; }
    const Vector<Scalar>& data() const { return data_; }

private:
    BlockPartition partition_;
    Vector<Scalar> data_;
};

} // namespace asyncfb
