pub mod network_oracle;
