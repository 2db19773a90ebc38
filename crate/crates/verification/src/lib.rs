//! Hosts the `acceptance` test target. It lives in its own package so a
//! workspace test run finishes every other suite before it.
