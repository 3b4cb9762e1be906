from rest_framework import serializers


class ArtifactSerializer(serializers.Serializer):
    path = serializers.CharField()
    sha256 = serializers.CharField()


class RunManifestSerializer(serializers.Serializer):
    command = serializers.CharField()
    config_path = serializers.CharField(allow_null=True)
    input_paths = serializers.ListField(child=serializers.CharField())
    output_dir = serializers.CharField()
    seed = serializers.IntegerField(allow_null=True)
    started_at = serializers.CharField()
    finished_at = serializers.CharField()
    artifacts = ArtifactSerializer(many=True)


def dump_manifest(manifest):
    return RunManifestSerializer(manifest).data
