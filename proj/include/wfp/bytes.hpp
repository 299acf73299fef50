// bytes.hpp - endian-aware readers/writers over byte buffers, file slurp/dump
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "wfp/errors.hpp"

namespace wfp {

enum class ByteOrder : uint8_t { Little, Big };

class ByteReader {
public:
    ByteReader(std::span<const uint8_t> data, ByteOrder order)
        : data_(data), order_(order) {}

    size_t pos() const { return pos_; }
    size_t remaining() const { return data_.size() - pos_; }
    bool can_read(size_t n) const { return remaining() >= n; }
    void set_order(ByteOrder order) { order_ = order; }

    void skip(size_t n) {
        require(n);
        pos_ += n;
    }

    uint8_t u8() {
        require(1);
        return data_[pos_++];
    }

    uint16_t u16() {
        require(2);
        uint16_t v = order_ == ByteOrder::Big
                         ? static_cast<uint16_t>(data_[pos_] << 8 | data_[pos_ + 1])
                         : static_cast<uint16_t>(data_[pos_ + 1] << 8 | data_[pos_]);
        pos_ += 2;
        return v;
    }

    uint32_t u32() {
        require(4);
        uint32_t v = 0;
        if (order_ == ByteOrder::Big) {
            for (int i = 0; i < 4; ++i) v = v << 8 | data_[pos_ + i];
        } else {
            for (int i = 3; i >= 0; --i) v = v << 8 | data_[pos_ + i];
        }
        pos_ += 4;
        return v;
    }

    uint64_t u64() {
        uint64_t a = u32();
        uint64_t b = u32();
        return order_ == ByteOrder::Big ? (a << 32 | b) : (b << 32 | a);
    }

    std::span<const uint8_t> bytes(size_t n) {
        require(n);
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

private:
    void require(size_t n) const {
        if (!can_read(n)) raise(Errc::TruncatedBlock, "read past end of buffer");
    }

    std::span<const uint8_t> data_;
    ByteOrder order_;
    size_t pos_ = 0;
};

class ByteWriter {
public:
    explicit ByteWriter(ByteOrder order) : order_(order) {}

    const std::vector<uint8_t>& data() const { return data_; }
    size_t size() const { return data_.size(); }

    void u8(uint8_t v) { data_.push_back(v); }

    void u16(uint16_t v) {
        if (order_ == ByteOrder::Big) {
            data_.push_back(static_cast<uint8_t>(v >> 8));
            data_.push_back(static_cast<uint8_t>(v));
        } else {
            data_.push_back(static_cast<uint8_t>(v));
            data_.push_back(static_cast<uint8_t>(v >> 8));
        }
    }

    void u32(uint32_t v) {
        if (order_ == ByteOrder::Big) {
            for (int i = 3; i >= 0; --i) data_.push_back(static_cast<uint8_t>(v >> (8 * i)));
        } else {
            for (int i = 0; i < 4; ++i) data_.push_back(static_cast<uint8_t>(v >> (8 * i)));
        }
    }

    void u64(uint64_t v) {
        if (order_ == ByteOrder::Big) {
            u32(static_cast<uint32_t>(v >> 32));
            u32(static_cast<uint32_t>(v));
        } else {
            u32(static_cast<uint32_t>(v));
            u32(static_cast<uint32_t>(v >> 32));
        }
    }

    void bytes(std::span<const uint8_t> s) { data_.insert(data_.end(), s.begin(), s.end()); }

    void pad_to_32bit() {
        while (data_.size() % 4 != 0) data_.push_back(0);
    }

private:
    ByteOrder order_;
    std::vector<uint8_t> data_;
};

inline std::vector<uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot open " + path);
    std::vector<uint8_t> out((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
    return out;
}

inline void write_file_bytes(const std::string& path, std::span<const uint8_t> data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::ios_base::failure("cannot open " + path);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
    if (!out) throw std::ios_base::failure("write failed for " + path);
}

inline void write_file_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::ios_base::failure("cannot open " + path);
    out << text;
    if (!out) throw std::ios_base::failure("write failed for " + path);
}

inline std::string read_file_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot open " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

} // namespace wfp
