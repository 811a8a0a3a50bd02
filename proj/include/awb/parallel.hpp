// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the awbtree Project.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace awb
{

/// Worker count: AWB_THREADS if set and positive, otherwise hardware concurrency.
inline std::size_t worker_count()
{
    std::size_t n = 0;
    if ( const char *env = std::getenv( "AWB_THREADS" ) )
    {
        try
        {
            n = static_cast<std::size_t>( std::stoul( env ) );
        }
        catch ( const std::exception & )
        {
            n = 0;
        }
    }
    if ( n == 0 )
    {
        n = std::max( 1u, std::thread::hardware_concurrency() );
    }
    return n;
}

/// Runs fn(i) for i in [0, count). Each index writes its own output slot, so
/// results never depend on the worker count. The first exception is rethrown.
template <typename Fn>
void parallel_for( std::size_t count, Fn &&fn, std::size_t workers = worker_count() )
{
    workers = std::min( workers, count );
    if ( workers <= 1 )
    {
        for ( std::size_t i = 0; i < count; ++i )
        {
            fn( i );
        }
        return;
    }

    std::atomic<std::size_t> next{ 0 };
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for ( std::size_t i = next++; i < count; i = next++ )
        {
            try
            {
                fn( i );
            }
            catch ( ... )
            {
                std::lock_guard lock( error_mutex );
                if ( !error )
                {
                    error = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve( workers );
    for ( std::size_t w = 0; w < workers; ++w )
    {
        pool.emplace_back( body );
    }
    for ( auto &t: pool )
    {
        t.join();
    }
    if ( error )
    {
        std::rethrow_exception( error );
    }
}

} // namespace awb
