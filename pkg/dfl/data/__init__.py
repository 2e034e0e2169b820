"""Dataset ingestion: IDX files, synthetic blobs and IID sharding."""
