#include "qinpaint/train/checkpoint.hpp"

#include <json.hpp>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace qinpaint::train {

namespace {

std::uint64_t to_little_endian(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
}

std::string stem_for(std::size_t iteration) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "params_%08zu", iteration);
    return buf;
}

}  // namespace

std::filesystem::path save_checkpoint(const qnn::ParameterSet& params, const std::filesystem::path& dir,
                                      std::size_t iteration) {
    std::filesystem::create_directories(dir);
    const std::string stem = stem_for(iteration);
    const auto bin_path = dir / (stem + ".bin");
    const auto json_path = dir / (stem + ".json");

    const Eigen::VectorXd flat = params.flatten();
    {
        std::ofstream out(bin_path, std::ios::binary);
        if (!out) throw IoError("cannot write checkpoint " + bin_path.string());
        for (Eigen::Index i = 0; i < flat.size(); ++i) {
            std::uint64_t bits;
            std::memcpy(&bits, &flat[i], sizeof bits);
            bits = to_little_endian(bits);
            out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
        }
        if (!out) throw IoError("short write to " + bin_path.string());
    }

    nlohmann::json j;
    j["iteration"] = iteration;
    j["data"] = bin_path.filename().string();
    j["dtype"] = "float64-le";
    j["count"] = flat.size();
    j["blocks"] = nlohmann::json::array();
    for (const auto& b : params.layout())
        j["blocks"].push_back({{"stage", b.stage}, {"name", b.name}, {"shape", b.shape}, {"offset", b.offset},
                               {"count", b.count}});
    std::ofstream out(json_path);
    if (!out) throw IoError("cannot write checkpoint manifest " + json_path.string());
    out << j.dump(2) << '\n';
    return json_path;
}

void load_checkpoint(const std::filesystem::path& manifest, qnn::ParameterSet& params) {
    std::ifstream in(manifest);
    if (!in) throw IoError("cannot read checkpoint manifest " + manifest.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(manifest.string() + ": " + e.what());
    }
    const auto count = j.at("count").get<Eigen::Index>();
    if (count != params.size())
        throw ShapeError(manifest.string() + ": checkpoint holds " + std::to_string(count) +
                         " parameters, network has " + std::to_string(params.size()));

    const auto bin_path = manifest.parent_path() / j.at("data").get<std::string>();
    std::ifstream bin(bin_path, std::ios::binary);
    if (!bin) throw IoError("cannot read checkpoint data " + bin_path.string());
    Eigen::VectorXd flat(count);
    for (Eigen::Index i = 0; i < count; ++i) {
        std::uint64_t bits;
        bin.read(reinterpret_cast<char*>(&bits), sizeof bits);
        if (!bin) throw IoError(bin_path.string() + ": truncated checkpoint data");
        bits = to_little_endian(bits);
        std::memcpy(&flat[i], &bits, sizeof bits);
    }
    params.assign(flat);
}

void write_loss_trace(const std::filesystem::path& path, std::span<const double> trace) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write loss trace " + path.string());
    out << "iter,loss\n" << std::setprecision(17);
    for (std::size_t i = 0; i < trace.size(); ++i) out << i << ',' << trace[i] << '\n';
    if (!out) throw IoError("short write to " + path.string());
}

std::vector<double> read_loss_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read loss trace " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != "iter,loss") throw IoError(path.string() + ": missing iter,loss header");
    std::vector<double> trace;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw IoError(path.string() + ": malformed row '" + line + "'");
        trace.push_back(std::stod(line.substr(comma + 1)));
    }
    return trace;
}

}  // namespace qinpaint::train
