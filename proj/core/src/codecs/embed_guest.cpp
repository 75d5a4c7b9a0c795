// Build-time helper: assembles guest decoder sources and emits a C++ file
// holding the resulting VXE images.
//
//   vxa_embed OUTPUT.cpp SOURCE.s...

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "vxa/isa/assembler.hpp"
#include "vxa/isa/image.hpp"

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: vxa_embed OUTPUT.cpp SOURCE.s...\n";
    return 1;
  }
  std::ostringstream out;
  out << "// Generated by vxa_embed. Do not edit.\n"
         "#include <cstddef>\n#include \"vxa/codecs/bundled.hpp\"\n\n"
         "namespace vxa::codecs::detail {\nnamespace {\n";
  std::ostringstream table;
  for (int i = 2; i < argc; ++i) {
    std::filesystem::path src = argv[i];
    std::ifstream in(src, std::ios::binary);
    if (!in) {
      std::cerr << src << ": cannot open\n";
      return 1;
    }
    std::stringstream text;
    text << in.rdbuf();
    vxa::Bytes image;
    try {
      image = vxa::isa::serialize_image(vxa::isa::assemble(text.str()));
      vxa::isa::validate_image(image);
    } catch (const std::exception& e) {
      std::cerr << src.string() << ": " << e.what() << "\n";
      return 1;
    }
    const std::string name = src.stem().string();
    out << "const unsigned char k_" << name << "[] = {";
    for (std::size_t j = 0; j < image.size(); ++j) {
      if (j % 16 == 0) out << "\n  ";
      char buf[8];
      std::snprintf(buf, sizeof buf, "0x%02x,", image[j]);
      out << buf;
    }
    out << "\n};\n\n";
    table << "    {\"" << name << "\", k_" << name << ", sizeof k_" << name << "},\n";
  }
  out << "}  // namespace\n\nconst EmbeddedImage kEmbeddedImages[] = {\n"
      << table.str() << "};\nconst std::size_t kEmbeddedImageCount = "
      << (argc - 2) << ";\n\n}  // namespace vxa::codecs::detail\n";

  std::ofstream f(argv[1], std::ios::binary | std::ios::trunc);
  f << out.str();
  return f ? 0 : 1;
}
