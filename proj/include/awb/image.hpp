// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the awbtree Project.

#pragma once

#include <algorithm>
#include <array>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <png.h>

#include "error.hpp"

namespace awb
{

/// Camera black and white points in raw counts.
struct CameraProfile
{
    std::string name;
    double darkness_level = 0.0;
    double saturation_level = 65535.0;

    void validate() const
    {
        if ( !( darkness_level >= 0.0 && darkness_level < saturation_level ) )
        {
            throw Error(
                ErrorKind::InvalidArgument,
                "camera profile needs 0 <= darkness_level < saturation_level" );
        }
    }
};

/// Axis-aligned pixel rectangle excluded from every statistic.
struct MaskRect
{
    std::int64_t x = 0;
    std::int64_t y = 0;
    std::int64_t w = 0;
    std::int64_t h = 0;
};

/// Decoded file contents: interleaved RGB samples in raw counts.
struct RawImage
{
    std::size_t width = 0;
    std::size_t height = 0;
    std::uint32_t maxval = 255;
    std::vector<std::uint16_t> samples;
};

/// Linear RGB in [0, 1] with a per-pixel usability mask, row-major.
class LinearImage
{
public:
    LinearImage() = default;

    LinearImage(
        std::size_t width,
        std::size_t height,
        std::vector<std::array<double, 3>> pixels,
        std::vector<std::uint8_t> mask = {} )
        : m_width( width ), m_height( height ), m_pixels( std::move( pixels ) ), m_mask( std::move( mask ) )
    {
        if ( m_pixels.size() != width * height )
        {
            throw Error( ErrorKind::DimensionError, "pixel count does not match image size" );
        }
        if ( m_mask.empty() )
        {
            m_mask.assign( m_pixels.size(), 1 );
        }
        if ( m_mask.size() != m_pixels.size() )
        {
            throw Error( ErrorKind::DimensionError, "mask size does not match image size" );
        }
    }

    std::size_t width() const noexcept { return m_width; }
    std::size_t height() const noexcept { return m_height; }
    std::size_t size() const noexcept { return m_pixels.size(); }
    const std::array<double, 3> &pixel( std::size_t i ) const { return m_pixels[i]; }
    bool usable( std::size_t i ) const { return m_mask[i] != 0; }
    std::span<const std::array<double, 3>> pixels() const noexcept { return m_pixels; }

    std::size_t usable_count() const
    {
        return static_cast<std::size_t>( std::count( m_mask.begin(), m_mask.end(), std::uint8_t{ 1 } ) );
    }

    /// Calls fn(rgb) for every usable pixel in row-major order.
    template <typename Fn>
    void for_each_usable( Fn &&fn ) const
    {
        for ( std::size_t i = 0; i < m_pixels.size(); ++i )
        {
            if ( m_mask[i] )
            {
                fn( m_pixels[i] );
            }
        }
    }

private:
    std::size_t m_width = 0;
    std::size_t m_height = 0;
    std::vector<std::array<double, 3>> m_pixels;
    std::vector<std::uint8_t> m_mask;
};

namespace detail
{

struct FileCloser
{
    void operator()( std::FILE *f ) const noexcept { std::fclose( f ); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline RawImage decode_png( const std::string &path )
{
    FilePtr file( std::fopen( path.c_str(), "rb" ) );
    if ( !file )
    {
        throw Error( ErrorKind::IoError, "cannot open '" + path + "'" );
    }
    png_structp png = png_create_read_struct( PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr );
    png_infop info = png ? png_create_info_struct( png ) : nullptr;
    if ( !png || !info )
    {
        png_destroy_read_struct( &png, &info, nullptr );
        throw Error( ErrorKind::IoError, "libpng initialization failed" );
    }

    RawImage img;
    std::vector<png_byte> row;
    // Nothing with a destructor may be created between setjmp and the
    // last libpng call.
    if ( setjmp( png_jmpbuf( png ) ) )
    {
        png_destroy_read_struct( &png, &info, nullptr );
        throw Error( ErrorKind::IoError, "corrupt PNG '" + path + "'" );
    }
    png_init_io( png, file.get() );
    png_read_info( png, info );
    const auto width = png_get_image_width( png, info );
    const auto height = png_get_image_height( png, info );
    const int depth = png_get_bit_depth( png, info );
    const int color = png_get_color_type( png, info );
    const bool rgb = color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA;
    if ( !rgb || ( depth != 8 && depth != 16 ) || png_get_interlace_type( png, info ) != PNG_INTERLACE_NONE )
    {
        png_destroy_read_struct( &png, &info, nullptr );
        throw Error(
            ErrorKind::IoError,
            "'" + path + "': only non-interlaced 8/16-bit RGB(A) PNG is supported" );
    }
    if ( color == PNG_COLOR_TYPE_RGB_ALPHA )
    {
        png_set_strip_alpha( png );
    }
    png_read_update_info( png, info );

    img.width = width;
    img.height = height;
    img.maxval = depth == 16 ? 65535u : 255u;
    img.samples.resize( static_cast<std::size_t>( width ) * height * 3 );
    row.resize( png_get_rowbytes( png, info ) );
    for ( png_uint_32 y = 0; y < height; ++y )
    {
        png_read_row( png, row.data(), nullptr );
        auto *out = img.samples.data() + static_cast<std::size_t>( y ) * width * 3;
        for ( std::size_t i = 0; i < static_cast<std::size_t>( width ) * 3; ++i )
        {
            // 16-bit PNG samples are big-endian.
            out[i] = depth == 16 ? static_cast<std::uint16_t>( ( row[2 * i] << 8 ) | row[2 * i + 1] )
                                 : static_cast<std::uint16_t>( row[i] );
        }
    }
    png_read_end( png, nullptr );
    png_destroy_read_struct( &png, &info, nullptr );
    return img;
}

inline void skip_pnm_space( std::istream &in )
{
    while ( true )
    {
        const int c = in.peek();
        if ( c == '#' )
        {
            std::string line;
            std::getline( in, line );
        }
        else if ( c == ' ' || c == '\t' || c == '\n' || c == '\r' )
        {
            in.get();
        }
        else
        {
            return;
        }
    }
}

inline RawImage decode_ppm( const std::string &path )
{
    std::ifstream in( path, std::ios::binary );
    if ( !in )
    {
        throw Error( ErrorKind::IoError, "cannot open '" + path + "'" );
    }
    std::string magic( 2, '\0' );
    in.read( magic.data(), 2 );
    if ( magic != "P6" )
    {
        throw Error( ErrorKind::IoError, "'" + path + "' is not a binary PPM (P6)" );
    }
    RawImage img;
    std::size_t w = 0, h = 0;
    std::uint32_t maxval = 0;
    skip_pnm_space( in );
    in >> w;
    skip_pnm_space( in );
    in >> h;
    skip_pnm_space( in );
    in >> maxval;
    if ( !in || in.get() == EOF || w == 0 || h == 0 )
    {
        throw Error( ErrorKind::IoError, "bad PPM header in '" + path + "'" );
    }
    if ( maxval != 255 && maxval != 65535 )
    {
        throw Error( ErrorKind::IoError, "'" + path + "': PPM maxval must be 255 or 65535" );
    }
    img.width = w;
    img.height = h;
    img.maxval = maxval;
    const std::size_t count = w * h * 3;
    const std::size_t bytes = maxval == 65535 ? 2 : 1;
    std::vector<unsigned char> buf( count * bytes );
    in.read( reinterpret_cast<char *>( buf.data() ), static_cast<std::streamsize>( buf.size() ) );
    if ( static_cast<std::size_t>( in.gcount() ) != buf.size() )
    {
        throw Error( ErrorKind::IoError, "truncated PPM '" + path + "'" );
    }
    img.samples.resize( count );
    for ( std::size_t i = 0; i < count; ++i )
    {
        img.samples[i] = bytes == 2 ? static_cast<std::uint16_t>( ( buf[2 * i] << 8 ) | buf[2 * i + 1] )
                                    : static_cast<std::uint16_t>( buf[i] );
    }
    return img;
}

} // namespace detail

/// Reads an 8/16-bit RGB PNG or a binary PPM, by file signature.
inline RawImage read_raw_image( const std::string &path )
{
    std::ifstream probe( path, std::ios::binary );
    if ( !probe )
    {
        throw Error( ErrorKind::IoError, "cannot open '" + path + "'" );
    }
    std::array<unsigned char, 8> sig{};
    probe.read( reinterpret_cast<char *>( sig.data() ), 8 );
    if ( probe.gcount() >= 2 && sig[0] == 'P' && sig[1] == '6' )
    {
        return detail::decode_ppm( path );
    }
    if ( probe.gcount() == 8 && png_sig_cmp( sig.data(), 0, 8 ) == 0 )
    {
        return detail::decode_png( path );
    }
    throw Error( ErrorKind::IoError, "'" + path + "' is neither PNG nor PPM" );
}

/// Black/white-point normalization and masking. Pixels with any raw channel
/// at or above the saturation level are masked, as are pixels inside
/// `rects`. Throws EmptyImage when nothing usable remains.
inline LinearImage linearize(
    const RawImage &raw, const CameraProfile &profile, std::span<const MaskRect> rects = {} )
{
    profile.validate();
    const std::size_t n = raw.width * raw.height;
    if ( raw.samples.size() != n * 3 )
    {
        throw Error( ErrorKind::DimensionError, "raw sample count does not match image size" );
    }
    const double range = profile.saturation_level - profile.darkness_level;
    std::vector<std::array<double, 3>> px( n );
    std::vector<std::uint8_t> mask( n, 1 );
    for ( std::size_t i = 0; i < n; ++i )
    {
        for ( std::size_t c = 0; c < 3; ++c )
        {
            const double v = raw.samples[3 * i + c];
            if ( v >= profile.saturation_level )
            {
                mask[i] = 0;
            }
            px[i][c] = std::clamp( ( v - profile.darkness_level ) / range, 0.0, 1.0 );
        }
    }
    for ( const auto &r: rects )
    {
        const auto x0 = std::clamp<std::int64_t>( r.x, 0, static_cast<std::int64_t>( raw.width ) );
        const auto y0 = std::clamp<std::int64_t>( r.y, 0, static_cast<std::int64_t>( raw.height ) );
        const auto x1 = std::clamp<std::int64_t>( r.x + r.w, 0, static_cast<std::int64_t>( raw.width ) );
        const auto y1 = std::clamp<std::int64_t>( r.y + r.h, 0, static_cast<std::int64_t>( raw.height ) );
        for ( auto y = y0; y < y1; ++y )
        {
            for ( auto x = x0; x < x1; ++x )
            {
                mask[static_cast<std::size_t>( y ) * raw.width + static_cast<std::size_t>( x )] = 0;
            }
        }
    }
    LinearImage img( raw.width, raw.height, std::move( px ), std::move( mask ) );
    if ( img.usable_count() == 0 )
    {
        throw Error( ErrorKind::EmptyImage, "every pixel is saturated or masked" );
    }
    return img;
}

inline LinearImage load_image(
    const std::string &path, const CameraProfile &profile, std::span<const MaskRect> rects = {} )
{
    return linearize( read_raw_image( path ), profile, rects );
}

/// Writes a binary PPM (maxval 255 or 65535).
inline void write_ppm( const std::string &path, const RawImage &img )
{
    std::ofstream out( path, std::ios::binary );
    if ( !out )
    {
        throw Error( ErrorKind::IoError, "cannot write '" + path + "'" );
    }
    out << "P6\n" << img.width << " " << img.height << "\n" << img.maxval << "\n";
    for ( auto s: img.samples )
    {
        if ( img.maxval > 255 )
        {
            out.put( static_cast<char>( s >> 8 ) );
        }
        out.put( static_cast<char>( s & 0xff ) );
    }
}

/// Writes an RGB PNG, 16-bit when maxval > 255.
inline void write_png( const std::string &path, const RawImage &img )
{
    detail::FilePtr file( std::fopen( path.c_str(), "wb" ) );
    if ( !file )
    {
        throw Error( ErrorKind::IoError, "cannot write '" + path + "'" );
    }
    png_structp png = png_create_write_struct( PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr );
    png_infop info = png ? png_create_info_struct( png ) : nullptr;
    if ( !png || !info )
    {
        png_destroy_write_struct( &png, &info );
        throw Error( ErrorKind::IoError, "libpng initialization failed" );
    }
    const volatile int depth = img.maxval > 255 ? 16 : 8;
    std::vector<png_byte> row( img.width * 3 * static_cast<std::size_t>( depth / 8 ) );
    if ( setjmp( png_jmpbuf( png ) ) )
    {
        png_destroy_write_struct( &png, &info );
        throw Error( ErrorKind::IoError, "PNG encode failed for '" + path + "'" );
    }
    png_init_io( png, file.get() );
    png_set_IHDR(
        png, info,
        static_cast<png_uint_32>( img.width ),
        static_cast<png_uint_32>( img.height ),
        depth, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
        PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT );
    png_write_info( png, info );
    for ( std::size_t y = 0; y < img.height; ++y )
    {
        const auto *src = img.samples.data() + y * img.width * 3;
        for ( std::size_t i = 0; i < img.width * 3; ++i )
        {
            if ( depth == 16 )
            {
                row[2 * i] = static_cast<png_byte>( src[i] >> 8 );
                row[2 * i + 1] = static_cast<png_byte>( src[i] & 0xff );
            }
            else
            {
                row[i] = static_cast<png_byte>( src[i] );
            }
        }
        png_write_row( png, row.data() );
    }
    png_write_end( png, nullptr );
    png_destroy_write_struct( &png, &info );
}

} // namespace awb
