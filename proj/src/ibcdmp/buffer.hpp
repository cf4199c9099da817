#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "ibcdmp/rng.hpp"
#include "ibcdmp/rollout.hpp"

namespace ibcdmp {

// Fixed-capacity FIFO ring of transitions. Index 0 is the oldest entry.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(const Transition& t);
    const Transition& at(std::size_t i) const;
    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }
    bool full() const { return size_ == capacity_; }
    void clear();

    /// `n` distinct indices drawn uniformly. Throws Error{InsufficientData} when n > size().
    std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;

private:
    std::size_t capacity_;
    std::size_t head_ = 0;  // next write slot once full
    std::size_t size_ = 0;
    std::vector<Transition> slots_;
};

/// One JSON object per line: {"s":[10],"a":[3],"r":x,"s2":[10],"d":0|1}.
void write_transitions(std::ostream& out, const std::vector<Transition>& ts);
std::vector<Transition> read_transitions(std::istream& in, const std::string& source_name);
void save_transitions(const std::filesystem::path& path, const std::vector<Transition>& ts);
std::vector<Transition> load_transitions(const std::filesystem::path& path);

}  // namespace ibcdmp
