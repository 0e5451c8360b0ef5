#include "phyre/rng.hpp"

namespace phyre {

namespace {

std::uint64_t splitmix(std::uint64_t z)
{
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

} // namespace

std::uint64_t fnv1a(std::string_view text)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text)
  {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix_key(std::uint64_t a, std::uint64_t b)
{
  return splitmix(splitmix(a) ^ (b + 0x632be59bd9b4e019ULL));
}

std::uint64_t counter_hash(std::uint64_t key, std::uint64_t counter)
{
  // Two rounds decorrelate neighbouring keys as well as neighbouring counters.
  return splitmix(splitmix(key ^ 0xd1b54a32d192ed03ULL) + counter * 0x9e3779b97f4a7c15ULL);
}

std::uint64_t KeyedRng::next_u64()
{
  return counter_hash(key_, counter_++);
}

double KeyedRng::uniform()
{
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double KeyedRng::uniform(double lo, double hi)
{
  return lo + (hi - lo) * uniform();
}

std::uint64_t KeyedRng::below(std::uint64_t n)
{
  if (n <= 1)
  {
    return 0;
  }
  // Rejection keeps the result exactly uniform.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do
  {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

} // namespace phyre
