public class Compress {
    public static int main(String[] args) {
        String s = "aaabccdd";
        StringBuilder sb = new StringBuilder();
        int i = 0;
        int groups = 0;
        while (i < s.length()) {
            char c = s.charAt(i);
            int j = i;
            while (j < s.length() && s.charAt(j) == c) {
                j++;
            }
            sb.append(c);
            if (j - i > 1) {
                sb.append(j - i);
            }
            groups++;
            i = j;
        }
        int len = sb.length();
        return len;
    }
}
