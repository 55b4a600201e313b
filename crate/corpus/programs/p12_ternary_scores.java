public class TernaryScores {
    static int score(String s, int k) {
        return s.length() * k;
    }

    public static int main(String[] args) {
        String[] words = {"level", "abc", "noon"};
        int[] result = new int[words.length];
        int intLength = 4;
        for (int i = 0; i < words.length; i++) {
            String s = words[i];
            result[i] =
                s.length() > (intLength + 1) / 2
                    ? -1
                    : score(s, intLength);
        }
        int total = 0;
        for (int r : result) {
            total += r;
        }
        return total;
    }
}
