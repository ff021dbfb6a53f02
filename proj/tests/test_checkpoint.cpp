#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "macf/checkpoint.hpp"
#include "macf/errors.hpp"
#include "macf/semigroup.hpp"

using namespace macf;

TEST_CASE("checkpoint round trip") {
  for (int dim = 1; dim <= 3; ++dim) {
    const SpectralField f = random_field(dim, 8, 1, dim);
    std::stringstream buf;
    write_checkpoint(buf, f);
    const std::string bytes = buf.str();
    CHECK(bytes.substr(0, 4) == "MACF");
    // header + half spectrum of complex doubles
    long half = 5;
    for (int a = 0; a < dim - 1; ++a) half *= 8;
    CHECK(bytes.size() == 4 + 2 + 1 + 4 + static_cast<std::size_t>(half) * 16);
    CHECK(static_cast<unsigned char>(bytes[6]) == dim);
    const SpectralField g = read_checkpoint(buf);
    CHECK(g == f);
  }
  const auto path = std::filesystem::temp_directory_path() / "macf_test_checkpoint.macf";
  const SpectralField f = random_field(2, 16, 3, 0);
  save_checkpoint(path, f);
  CHECK(load_checkpoint(path) == f);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint corruption is detected") {
  std::stringstream bad("XXXX0000");
  CHECK_THROWS_AS(read_checkpoint(bad), Error);
  std::stringstream buf;
  write_checkpoint(buf, random_field(1, 8, 1, 0));
  std::stringstream cut(buf.str().substr(0, 30));
  CHECK_THROWS_AS(read_checkpoint(cut), Error);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/file.macf"), Error);
}
