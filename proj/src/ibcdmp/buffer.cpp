#include "ibcdmp/buffer.hpp"

#include <fstream>
#include <random>
#include <string>
#include <unordered_set>

#include <json.hpp>

#include "ibcdmp/error.hpp"

namespace ibcdmp {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    require(capacity > 0, ErrorKind::InvalidArgument, "buffer capacity must be positive");
}

void ReplayBuffer::push(const Transition& t) {
    if (size_ < capacity_) {
        slots_.push_back(t);
        ++size_;
        return;
    }
    slots_[head_] = t;
    head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
    require(i < size_, ErrorKind::InvalidArgument, "buffer index out of range");
    return slots_[(head_ + i) % capacity_];
}

void ReplayBuffer::clear() {
    slots_.clear();
    head_ = 0;
    size_ = 0;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
    require(n <= size_, ErrorKind::InsufficientData,
            "requested " + std::to_string(n) + " samples from a buffer holding " + std::to_string(size_));
    // Floyd's algorithm: n draws, each set member equally likely.
    std::vector<std::size_t> out;
    out.reserve(n);
    std::unordered_set<std::size_t> seen;
    seen.reserve(n * 2);
    for (std::size_t j = size_ - n; j < size_; ++j) {
        std::uniform_int_distribution<std::size_t> u(0, j);
        std::size_t k = u(rng);
        if (!seen.insert(k).second) {
            k = j;
            seen.insert(k);
        }
        out.push_back(k);
    }
    return out;
}

namespace {

template <typename V>
nlohmann::json to_array(const V& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

template <typename V>
void from_array(const nlohmann::json& j, V& v, const std::string& where, const char* field) {
    require(j.is_array() && static_cast<Eigen::Index>(j.size()) == v.size(), ErrorKind::Parse,
            where + ": field '" + field + "' must hold " + std::to_string(v.size()) + " numbers");
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        require(j[i].is_number(), ErrorKind::Parse, where + ": field '" + field + "' is not numeric");
        v[i] = j[i].get<double>();
    }
}

}  // namespace

void write_transitions(std::ostream& out, const std::vector<Transition>& ts) {
    for (const auto& t : ts) {
        nlohmann::json j;
        j["s"] = to_array(t.s);
        j["a"] = to_array(t.a);
        j["r"] = t.r;
        j["s2"] = to_array(t.s2);
        j["d"] = t.d ? 1 : 0;
        out << j.dump() << '\n';
    }
}

std::vector<Transition> read_transitions(std::istream& in, const std::string& source_name) {
    std::vector<Transition> ts;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = source_name + ":" + std::to_string(line_no);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::Parse, where + ": " + e.what());
        }
        require(j.is_object(), ErrorKind::Parse, where + ": expected a JSON object");
        for (const char* key : {"s", "a", "r", "s2", "d"}) {
            require(j.contains(key), ErrorKind::Parse, where + ": missing field '" + key + "'");
        }
        Transition t;
        from_array(j["s"], t.s, where, "s");
        from_array(j["a"], t.a, where, "a");
        from_array(j["s2"], t.s2, where, "s2");
        require(j["r"].is_number(), ErrorKind::Parse, where + ": field 'r' is not numeric");
        t.r = j["r"].get<double>();
        const auto& d = j["d"];
        require(d.is_number_integer() || d.is_boolean(), ErrorKind::Parse, where + ": field 'd' must be 0 or 1");
        const int dv = d.is_boolean() ? static_cast<int>(d.get<bool>()) : d.get<int>();
        require(dv == 0 || dv == 1, ErrorKind::Parse, where + ": field 'd' must be 0 or 1");
        t.d = dv == 1;
        ts.push_back(t);
    }
    return ts;
}

void save_transitions(const std::filesystem::path& path, const std::vector<Transition>& ts) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
    write_transitions(out, ts);
    require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + path.string());
}

std::vector<Transition> load_transitions(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path.string());
    return read_transitions(in, path.string());
}

}  // namespace ibcdmp
