pub mod wb_oracle;
