#include "mpcnet/preproc_io.hpp"

#include <cstring>
#include <fstream>

namespace mpcnet {

namespace {

void put_u64(std::ostream& os, u64 v) {
  std::uint8_t b[8];
  for (int i = 0; i < 8; i++) b[i] = (std::uint8_t)(v >> (8 * i));
  os.write((const char*)b, 8);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  std::uint8_t b[4];
  for (int i = 0; i < 4; i++) b[i] = (std::uint8_t)(v >> (8 * i));
  os.write((const char*)b, 4);
}

u64 get_u64(std::istream& is) {
  std::uint8_t b[8];
  is.read((char*)b, 8);
  if (!is) throw PreprocError("bundle file truncated");
  u64 v = 0;
  for (int i = 0; i < 8; i++) v |= (u64)b[i] << (8 * i);
  return v;
}

std::uint32_t get_u32(std::istream& is) {
  std::uint8_t b[4];
  is.read((char*)b, 4);
  if (!is) throw PreprocError("bundle file truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; i++) v |= (std::uint32_t)b[i] << (8 * i);
  return v;
}

void read_section(std::istream& is, std::vector<u64>& out, std::size_t count) {
  out.resize(count);
  for (std::size_t i = 0; i < count; i++) out[i] = get_u64(is);
}

}  // namespace

void write_bundle_file(const std::string& path, const RawBundleFile& raw) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw PreprocError("cannot open bundle file for writing: " + path);
  os.write(kBundleMagic, 8);
  put_u32(os, raw.n);
  put_u64(os, raw.modulus);
  put_u64(os, raw.n_triples);
  put_u64(os, raw.n_masks);
  put_u64(os, raw.n_singles);
  put_u64(os, raw.n_bits);
  for (u64 v : raw.mac_key_shares) put_u64(os, v);
  for (u64 v : raw.triples) put_u64(os, v);
  for (u64 v : raw.masks) put_u64(os, v);
  for (u64 v : raw.singles) put_u64(os, v);
  for (u64 v : raw.bits) put_u64(os, v);
  if (!os) throw PreprocError("bundle file write failed: " + path);
}

RawBundleFile read_bundle_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw PreprocError("cannot open bundle file: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kBundleMagic, 8) != 0)
    throw PreprocError("bad bundle magic: " + path);
  RawBundleFile raw;
  raw.n = get_u32(is);
  raw.modulus = get_u64(is);
  raw.n_triples = get_u64(is);
  raw.n_masks = get_u64(is);
  raw.n_singles = get_u64(is);
  raw.n_bits = get_u64(is);
  if (raw.n < 2 || raw.modulus < 2) throw PreprocError("bad bundle header: " + path);
  std::size_t n = raw.n;
  read_section(is, raw.mac_key_shares, n);
  read_section(is, raw.triples, n * raw.n_triples * 6);
  read_section(is, raw.masks, n * raw.n_masks * 2);
  read_section(is, raw.singles, n * raw.n_singles * 2);
  read_section(is, raw.bits, n * raw.n_bits * 2);
  // all values must already be canonical for the stated modulus
  auto canonical = [&](const std::vector<u64>& v) {
    for (u64 x : v)
      if (x >= raw.modulus) throw PreprocError("non-canonical field element in bundle");
  };
  canonical(raw.mac_key_shares);
  canonical(raw.triples);
  canonical(raw.masks);
  canonical(raw.singles);
  canonical(raw.bits);
  return raw;
}

}  // namespace mpcnet
