pub mod kn_brute;
